/**
 * Browser shell: hash routing, session keeping, and the 10 s list poll.
 * All rendering goes through the pure view modules; this file only wires
 * DOM events to API calls.
 */

import { ApiError, MedsyncApi, SessionExpiredError } from './api.js';
import { DraftStore } from './drafts.js';
import { loadWelcome, renderWelcome, welcomeFingerprint } from './welcome.js';
import { ConsultationWizard, renderWizard, type WizardDraft } from './wizard.js';
import { escalate, loadThread, renderThread, sendReply } from './thread.js';
import { loadDirectory, renderDirectory } from './directory.js';
import type { Target } from './types.js';

const POLL_MS = 10_000;
const root = document.getElementById('app') as HTMLElement;

const api = new MedsyncApi(window.location.origin, {
  onSessionExpired: () => {
    localStorage.removeItem('medsync.session');
    window.location.hash = '#/login';
  },
});

const drafts = new DraftStore<WizardDraft>(localStorage);
let wizard: ConsultationWizard | null = null;
let currentDoctor = '';
let pollTimer: number | undefined;
let lastFingerprint = '';

function restoreSession(): boolean {
  const raw = localStorage.getItem('medsync.session');
  if (!raw) return false;
  try {
    const saved = JSON.parse(raw) as { token: string; doctor: string };
    api.setToken(saved.token);
    currentDoctor = saved.doctor;
    return true;
  } catch {
    return false;
  }
}

async function route(): Promise<void> {
  stopPolling();
  const hash = window.location.hash || '#/welcome';
  if (!api.hasSession() && !restoreSession() && hash !== '#/login') {
    window.location.hash = '#/login';
    return;
  }
  try {
    if (hash === '#/login') renderLogin();
    else if (hash === '#/wizard') await showWizard();
    else if (hash.startsWith('#/thread/')) await showThread(hash.slice('#/thread/'.length));
    else if (hash === '#/directory') await showDirectory();
    else await showWelcome();
  } catch (err) {
    if (err instanceof SessionExpiredError) return; // redirect already queued
    root.innerHTML = `<div class="banner error">${err instanceof ApiError ? err.detail : 'something went wrong'}</div>`;
  }
}

function renderLogin(): void {
  root.innerHTML = [
    '<form class="login"><h2>medsync</h2>',
    '<label>Doctor id <input name="doctor" autocomplete="username"></label>',
    '<label>Secret <input name="secret" type="password" autocomplete="current-password"></label>',
    '<button data-action="login">Sign in</button><p class="login-error"></p></form>',
  ].join('\n');
}

async function doLogin(form: HTMLFormElement): Promise<void> {
  const doctor = (form.elements.namedItem('doctor') as HTMLInputElement).value.trim();
  const secret = (form.elements.namedItem('secret') as HTMLInputElement).value;
  try {
    const session = await api.login(doctor, secret);
    localStorage.setItem('medsync.session', JSON.stringify({ token: session.token, doctor: session.doctor }));
    currentDoctor = session.doctor;
    window.location.hash = '#/welcome';
  } catch (err) {
    const p = form.querySelector('.login-error') as HTMLElement;
    p.textContent = err instanceof ApiError ? err.detail : 'login failed';
  }
}

async function showWelcome(): Promise<void> {
  const model = await loadWelcome(api);
  lastFingerprint = welcomeFingerprint(model);
  root.innerHTML = nav() + renderWelcome(model);
  startPolling();
}

function startPolling(): void {
  pollTimer = window.setInterval(async () => {
    try {
      const model = await loadWelcome(api);
      const fp = welcomeFingerprint(model);
      if (fp !== lastFingerprint) {
        lastFingerprint = fp;
        root.innerHTML = nav() + renderWelcome(model);
      }
    } catch {
      // offline is normal here; the next poll will try again
    }
  }, POLL_MS);
}

function stopPolling(): void {
  if (pollTimer !== undefined) window.clearInterval(pollTimer);
  pollTimer = undefined;
}

async function showWizard(): Promise<void> {
  wizard = wizard ?? new ConsultationWizard(api, drafts, currentDoctor);
  root.innerHTML = nav() + renderWizard(wizard);
}

async function showThread(id: string): Promise<void> {
  const thread = await loadThread(api, id);
  root.innerHTML = nav() + renderThread(thread);
}

async function showDirectory(): Promise<void> {
  root.innerHTML = nav() + renderDirectory(await loadDirectory(api));
}

function nav(): string {
  return (
    '<nav><a href="#/welcome">Cases</a> <a href="#/wizard">New consultation</a> ' +
    '<a href="#/directory">Colleagues &amp; groups</a></nav>'
  );
}

root.addEventListener('click', (event) => {
  const el = (event.target as HTMLElement).closest('button');
  if (!el) return;
  const action = el.dataset['action'];
  const targetJson = el.getAttribute('data-target');
  event.preventDefault();
  void (async () => {
    if (action === 'login') await doLogin(el.closest('form') as HTMLFormElement);
    else if (action === 'next' && wizard) {
      readWizardForm();
      await wizard.next();
      root.innerHTML = nav() + renderWizard(wizard);
    } else if (action === 'back' && wizard) {
      wizard.back();
      root.innerHTML = nav() + renderWizard(wizard);
    } else if (targetJson && wizard) {
      wizard.choose(JSON.parse(targetJson) as Target);
      root.innerHTML = nav() + renderWizard(wizard);
    } else if (action === 'submit' && wizard) {
      try {
        const thread = await wizard.submit();
        wizard = null;
        window.location.hash = `#/thread/${thread.id}`;
      } catch {
        root.innerHTML = nav() + renderWizard(wizard as ConsultationWizard);
      }
    } else if (action === 'reply') {
      const section = el.closest('.thread') as HTMLElement;
      const body = (section.querySelector('textarea[name=body]') as HTMLTextAreaElement).value;
      await sendReply(api, section.dataset['thread'] as string, body);
      await showThread(section.dataset['thread'] as string);
    } else if (action === 'escalate') {
      const section = el.closest('.thread') as HTMLElement;
      await escalate(api, section.dataset['thread'] as string);
      await showThread(section.dataset['thread'] as string);
    } else if (action === 'add-colleague') {
      const input = root.querySelector('.add-colleague input[name=to]') as HTMLInputElement;
      if (input.value.trim()) await api.setColleague(input.value.trim(), true);
      await showDirectory();
    } else if (action === 'drop-colleague') {
      await api.setColleague(el.dataset['id'] as string, false);
      await showDirectory();
    } else if (action === 'join-group' || action === 'leave-group') {
      await api.setMembership(el.dataset['id'] as string, action === 'join-group');
      await showDirectory();
    }
  })();
});

// keep the draft current as the doctor types
root.addEventListener('input', () => {
  if (wizard && wizard.step === 'form') readWizardForm();
});

function readWizardForm(): void {
  if (!wizard) return;
  const read = (name: string) =>
    (root.querySelector(`[name=${name}]`) as HTMLInputElement | HTMLTextAreaElement | null)?.value;
  wizard.updateForm({
    age_band: read('age_band'),
    sex: read('sex'),
    clinical_history: read('clinical_history'),
    specialization_requested: read('specialization_requested'),
  });
}

window.addEventListener('hashchange', () => void route());
void route();
