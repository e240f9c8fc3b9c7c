/**
 * Two-step consultation wizard.
 *
 * Step 1 collects the non-identifying case form. Step 2 shows the three
 * candidate lists (colleagues, groups, referral departments) side by
 * side; the decision of where the case goes is deferred to this final
 * step, and nothing is sent until the doctor picks a target.
 *
 * The draft is written to storage on every edit, so a dropped
 * connection or an interrupted session loses no typed history.
 */

import { ApiError, MedsyncApi } from './api.js';
import type { DraftStore } from './drafts.js';
import type { CandidateSet, CaseForm, CaseFormField, Target, ThreadDetail, ThreadKind } from './types.js';
import { AGE_BANDS, CASE_FORM_FIELDS, SEXES } from './types.js';
import { esc } from './html.js';

export type WizardStep = 'form' | 'candidates';

export interface WizardDraft {
  kind: ThreadKind;
  caseForm: CaseForm;
  target: Target | null;
}

export function emptyCaseForm(): CaseForm {
  return {
    age_band: 'unspecified',
    sex: 'unspecified',
    clinical_history: '',
    specialization_requested: null,
    attachments: [],
  };
}

export class ConsultationWizard {
  step: WizardStep = 'form';
  kind: ThreadKind = 'consultation';
  caseForm: CaseForm = emptyCaseForm();
  candidates: CandidateSet | null = null;
  target: Target | null = null;
  errors: string[] = [];
  /** true when the last submit failed in a way worth retrying as-is */
  retriable = false;

  constructor(
    private readonly api: MedsyncApi,
    private readonly drafts: DraftStore<WizardDraft>,
    private readonly owner: string,
  ) {
    const saved = drafts.load(owner);
    if (saved) {
      this.kind = saved.kind;
      this.caseForm = { ...emptyCaseForm(), ...saved.caseForm };
      this.target = saved.target;
    }
  }

  /** Apply edits from the form; keys outside the case form schema are dropped. */
  updateForm(patch: Partial<Record<string, unknown>>): void {
    for (const field of CASE_FORM_FIELDS) {
      if (!(field in patch)) continue;
      const value = patch[field];
      if (field === 'attachments') {
        this.caseForm.attachments = Array.isArray(value) ? value.map(String) : [];
      } else if (field === 'specialization_requested') {
        this.caseForm.specialization_requested =
          value === null || value === '' ? null : String(value);
      } else {
        this.caseForm[field as Exclude<CaseFormField, 'attachments' | 'specialization_requested'>] =
          String(value ?? '');
      }
    }
    this.errors = [];
    this.persist();
  }

  validateForm(): string[] {
    const problems: string[] = [];
    if (!this.caseForm.clinical_history.trim()) {
      problems.push('clinical history is required');
    }
    if (!(AGE_BANDS as readonly string[]).includes(this.caseForm.age_band)) {
      problems.push(`unknown age band ${this.caseForm.age_band}`);
    }
    if (!(SEXES as readonly string[]).includes(this.caseForm.sex)) {
      problems.push(`unknown sex ${this.caseForm.sex}`);
    }
    return problems;
  }

  /** Advance to consultant selection; fetches the candidate lists. */
  async next(): Promise<void> {
    this.errors = this.validateForm();
    if (this.errors.length > 0) return;
    const specialty = this.caseForm.specialization_requested ?? undefined;
    this.candidates = await this.api.consultants(specialty);
    this.step = 'candidates';
  }

  back(): void {
    this.step = 'form';
    this.errors = [];
  }

  choose(target: Target): void {
    this.target = target;
    this.persist();
  }

  canSubmit(): boolean {
    return this.step === 'candidates' && this.target !== null;
  }

  /**
   * Post the thread and its first assignment in one request. On success
   * the draft is cleared; on failure it is kept so the doctor can retry
   * without retyping anything.
   */
  async submit(): Promise<ThreadDetail> {
    if (!this.canSubmit() || this.target === null) {
      throw new Error('pick a consultant, group, or department before sending');
    }
    try {
      const { thread } = await this.api.createThread(this.kind, this.caseForm, this.target);
      this.drafts.clear(this.owner);
      this.retriable = false;
      return thread;
    } catch (err) {
      if (err instanceof ApiError) {
        this.retriable = err.status === 0 || err.status >= 500;
        this.errors = [err.detail];
      }
      throw err;
    }
  }

  /** Walk away without sending; the draft is discarded on purpose. */
  abandon(): void {
    this.drafts.clear(this.owner);
    this.step = 'form';
    this.caseForm = emptyCaseForm();
    this.candidates = null;
    this.target = null;
    this.errors = [];
  }

  private persist(): void {
    this.drafts.save(this.owner, {
      kind: this.kind,
      caseForm: this.caseForm,
      target: this.target,
    });
  }
}

// -- rendering --------------------------------------------------------------

export function renderWizard(w: ConsultationWizard): string {
  const body = w.step === 'form' ? renderFormStep(w) : renderCandidateStep(w);
  const errors =
    w.errors.length === 0
      ? ''
      : `<ul class="errors">${w.errors.map((e) => `<li>${esc(e)}</li>`).join('')}</ul>`;
  return `<section class="wizard step-${w.step}">\n${errors}${body}\n</section>`;
}

function renderFormStep(w: ConsultationWizard): string {
  const ageOptions = AGE_BANDS.map(
    (b) => `<option value="${b}"${b === w.caseForm.age_band ? ' selected' : ''}>${b}</option>`,
  ).join('');
  const sexOptions = SEXES.map(
    (s) => `<option value="${s}"${s === w.caseForm.sex ? ' selected' : ''}>${s}</option>`,
  ).join('');
  return [
    '<h2>New consultation: case details</h2>',
    `<label>Age band <select name="age_band">${ageOptions}</select></label>`,
    `<label>Sex <select name="sex">${sexOptions}</select></label>`,
    `<label>Clinical history <textarea name="clinical_history">${esc(w.caseForm.clinical_history)}</textarea></label>`,
    `<label>Specialization requested <input name="specialization_requested" value="${esc(w.caseForm.specialization_requested ?? '')}"></label>`,
    '<button data-action="next">Choose consultant</button>',
  ].join('\n');
}

function renderCandidateStep(w: ConsultationWizard): string {
  const c = w.candidates ?? { colleagues: [], groups: [], group_names: {}, departments: [] };
  const colleagues = c.colleagues
    .map(
      (d) =>
        `<li><button data-target='${attrJson({ doctor: d.doctor })}'${isChosen(w, { doctor: d.doctor })}>` +
        `${esc(d.name)} <span class="meta">${esc(d.hospital)}</span></button></li>`,
    )
    .join('\n');
  const groups = c.groups
    .map(
      (g) =>
        `<li><button data-target='${attrJson({ group: g })}'${isChosen(w, { group: g })}>` +
        `${esc(c.group_names[g] ?? g)}</button></li>`,
    )
    .join('\n');
  const departments = c.departments
    .map(([hospital, specialty]) => {
      const target: Target = { department: { hospital, specialty } };
      return (
        `<li><button data-target='${attrJson(target)}'${isChosen(w, target)}>` +
        `${esc(specialty)} <span class="meta">${esc(hospital)}</span></button></li>`
      );
    })
    .join('\n');
  const submitAttrs = w.canSubmit() ? '' : ' disabled';
  return [
    '<h2>Send the case to</h2>',
    '<div class="candidate-columns">',
    `<div class="col colleagues"><h3>Colleagues</h3><ul>${colleagues}</ul></div>`,
    `<div class="col groups"><h3>Groups</h3><ul>${groups}</ul></div>`,
    `<div class="col departments"><h3>Departments</h3><ul>${departments}</ul></div>`,
    '</div>',
    '<button data-action="back">Back</button>',
    `<button data-action="submit"${submitAttrs}>Send case</button>`,
  ].join('\n');
}

function isChosen(w: ConsultationWizard, target: Target): string {
  return w.target !== null && sameTarget(w.target, target) ? ' class="chosen"' : '';
}

export function sameTarget(a: Target, b: Target): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}

function attrJson(value: unknown): string {
  // single-quoted HTML attribute carrying JSON for the click handler
  return esc(JSON.stringify(value));
}
