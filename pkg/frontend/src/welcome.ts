/**
 * Welcome screen: the doctor's case lists plus the connectivity banner.
 *
 * Layout contract: primary cases (created by or assigned directly to the
 * doctor) render above other cases (assigned to a group they belong to),
 * in exactly the order the server returned them.
 */

import type { MedsyncApi } from './api.js';
import type { SyncStatus, ThreadSummary } from './types.js';
import { esc, formatStamp } from './html.js';

export interface WelcomeModel {
  primary: ThreadSummary[];
  other: ThreadSummary[];
  stale: boolean;
}

export async function loadWelcome(api: MedsyncApi): Promise<WelcomeModel> {
  const [lists, sync] = await Promise.all([api.listThreads(), api.syncStatus()]);
  return { primary: lists.primary, other: lists.other, stale: sync.stale };
}

export function renderWelcome(model: WelcomeModel): string {
  const parts: string[] = [];
  if (model.stale) parts.push(renderStaleBanner());
  parts.push('<section class="cases primary-cases">');
  parts.push(`<h2>Primary cases (${model.primary.length})</h2>`);
  parts.push(renderCaseList(model.primary, 'no cases assigned to you'));
  parts.push('</section>');
  parts.push('<section class="cases other-cases">');
  parts.push(`<h2>Other cases (${model.other.length})</h2>`);
  parts.push(renderCaseList(model.other, 'no cases in your groups'));
  parts.push('</section>');
  return parts.join('\n');
}

export function renderStaleBanner(): string {
  return (
    '<div class="banner stale-banner" role="alert">' +
    'This server has not synchronized recently. Remote cases and replies may be out of date.' +
    '</div>'
  );
}

function renderCaseList(threads: ThreadSummary[], emptyText: string): string {
  if (threads.length === 0) return `<p class="empty">${esc(emptyText)}</p>`;
  const items = threads.map(renderCaseCard);
  return `<ul class="case-list">\n${items.join('\n')}\n</ul>`;
}

function renderCaseCard(t: ThreadSummary): string {
  const badges: string[] = [`<span class="badge kind">${esc(t.kind)}</span>`];
  if (t.stub) {
    // a stub arrived over the side channel ahead of its full case data
    badges.push('<span class="badge stub">awaiting case data</span>');
  }
  if (t.status !== 'open') badges.push(`<span class="badge status">${esc(t.status)}</span>`);
  const spec = t.specialization ? ` &middot; ${esc(t.specialization)}` : '';
  const when = formatStamp(t.last_activity);
  return (
    `<li class="case-card" data-thread="${esc(t.id)}">` +
    `<a href="#/thread/${esc(t.id)}">${badges.join(' ')}${spec}</a>` +
    `<span class="meta">${esc(t.message_count)} messages &middot; ${esc(when)}</span>` +
    '</li>'
  );
}

/** Poll target for the 10 s refresh: re-renders only when content moved. */
export function welcomeFingerprint(model: WelcomeModel): string {
  const ids = (ts: ThreadSummary[]) => ts.map((t) => `${t.id}:${t.last_activity}:${t.stub}`).join(',');
  return `${model.stale}|${ids(model.primary)}|${ids(model.other)}`;
}

export function syncIsStale(status: SyncStatus): boolean {
  return status.stale;
}
