/**
 * Thread view: the conversation itself, its routing history, and the
 * escalate control that turns a consultation into a referral without
 * losing any of the exchange.
 */

import type { MedsyncApi } from './api.js';
import type { Assignment, Target, ThreadDetail } from './types.js';
import { esc, formatStamp } from './html.js';
import { CASE_FORM_FIELDS } from './types.js';

export async function loadThread(api: MedsyncApi, id: string): Promise<ThreadDetail> {
  const { thread } = await api.getThread(id);
  return thread;
}

export function renderThread(t: ThreadDetail): string {
  const parts: string[] = [`<section class="thread" data-thread="${esc(t.id)}">`];
  parts.push(`<h2>${esc(t.kind)} <span class="status">${esc(t.status)}</span></h2>`);
  if (t.stub) {
    parts.push(
      '<div class="banner stub-banner">Only a notice of this case has arrived so far; ' +
        'the full case data is still in transit.</div>',
    );
  }
  if (t.case_form) parts.push(renderCaseForm(t.case_form as unknown as Record<string, unknown>));
  parts.push(renderAssignments(t.assignments));
  parts.push('<ol class="messages">');
  for (const m of t.messages) {
    const files =
      m.attachments.length > 0
        ? `<span class="attachments">${m.attachments.map(esc).join(', ')}</span>`
        : '';
    parts.push(
      `<li><span class="author">${esc(m.author)}</span> ` +
        `<span class="when">${esc(formatStamp(m.at))}</span>` +
        `<p>${esc(m.body)}</p>${files}</li>`,
    );
  }
  parts.push('</ol>');
  parts.push(
    '<form class="reply"><textarea name="body"></textarea>' +
      '<button data-action="reply">Reply</button></form>',
  );
  if (t.kind === 'consultation' && t.status === 'open') {
    parts.push('<button data-action="escalate">Escalate to referral</button>');
  }
  parts.push('</section>');
  return parts.join('\n');
}

/**
 * Renders strictly the schema fields. A case form is non-identifying by
 * construction; if a key outside the schema ever shows up on the wire
 * it must not reach the screen.
 */
function renderCaseForm(form: Record<string, unknown>): string {
  const rows = CASE_FORM_FIELDS.filter((f) => form[f] !== null && form[f] !== undefined).map(
    (f) => {
      const value = form[f];
      const shown = Array.isArray(value) ? value.join(', ') : String(value);
      return `<dt>${esc(f.replace(/_/g, ' '))}</dt><dd>${esc(shown)}</dd>`;
    },
  );
  return `<dl class="case-form">${rows.join('')}</dl>`;
}

function renderAssignments(assignments: Assignment[]): string {
  if (assignments.length === 0) return '';
  const items = assignments.map(
    (a) =>
      `<li>${esc(describeTarget(a.target))} <span class="meta">by ${esc(a.assigned_by)}</span></li>`,
  );
  return `<ul class="assignments">${items.join('')}</ul>`;
}

export function describeTarget(target: Target): string {
  if ('doctor' in target) return `to ${target.doctor}`;
  if ('group' in target) return `to group ${target.group}`;
  return `to ${target.department.specialty} at ${target.department.hospital}`;
}

export async function sendReply(api: MedsyncApi, threadId: string, body: string): Promise<void> {
  await api.postMessage(threadId, body);
}

export async function escalate(api: MedsyncApi, threadId: string): Promise<ThreadDetail> {
  const { thread } = await api.escalate(threadId);
  return thread;
}
