// Colleague and group management. Colleague links are directed: adding
// someone makes them appear in your wizard lists, nothing more.

import type { MedsyncApi } from './api.js';
import type { Doctor, GroupEntry } from './types.js';
import { esc } from './html.js';

export interface DirectoryModel {
  colleagues: Doctor[];
  groups: GroupEntry[];
}

export async function loadDirectory(api: MedsyncApi): Promise<DirectoryModel> {
  const [c, g] = await Promise.all([api.colleagues(), api.memberships()]);
  return { colleagues: c.colleagues, groups: g.groups };
}

export function renderDirectory(model: DirectoryModel): string {
  const colleagues = model.colleagues
    .map(
      (d) =>
        `<li>${esc(d.display_name)} <span class="meta">${esc(d.hospital)}</span>` +
        `<button data-action="drop-colleague" data-id="${esc(d.id)}">remove</button></li>`,
    )
    .join('\n');
  const groups = model.groups
    .map((g) => {
      const action = g.member ? 'leave-group' : 'join-group';
      const label = g.member ? 'leave' : 'join';
      return (
        `<li>${esc(g.name)} <span class="meta">${esc(g.kind)}</span>` +
        `<button data-action="${action}" data-id="${esc(g.id)}">${label}</button></li>`
      );
    })
    .join('\n');
  return [
    '<section class="directory">',
    `<h2>Colleagues</h2><ul class="colleagues">${colleagues}</ul>`,
    '<form class="add-colleague"><input name="to" placeholder="doctor id">' +
      '<button data-action="add-colleague">add</button></form>',
    `<h2>Groups</h2><ul class="groups">${groups}</ul>`,
    '</section>',
  ].join('\n');
}
