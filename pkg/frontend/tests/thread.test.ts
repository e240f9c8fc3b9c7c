import { describe, expect, it } from 'vitest';

import { describeTarget, renderThread } from '../src/thread.js';
import type { Message, ThreadDetail } from '../src/types.js';
import { caseForm, summary } from './fakes.js';

function detail(overrides: Partial<ThreadDetail> = {}): ThreadDetail {
  return { ...summary(), messages: [], ...overrides };
}

function msg(id: string, body: string, extra: Partial<Message> = {}): Message {
  return {
    id,
    thread: 't-1',
    author: 'kofi',
    body,
    attachments: [],
    at: '1700000100000:0:accra',
    ...extra,
  };
}

describe('thread view', () => {
  it('renders messages in server order with attachments named', () => {
    const html = renderThread(
      detail({
        messages: [
          msg('m-1', 'initial findings'),
          msg('m-2', 'see attached scan', { attachments: ['pelvic-ultrasound.png'] }),
        ],
      }),
    );
    expect(html.indexOf('initial findings')).toBeLessThan(html.indexOf('see attached scan'));
    expect(html).toContain('pelvic-ultrasound.png');
  });

  it('escapes message bodies end to end', () => {
    const html = renderThread(detail({ messages: [msg('m-1', '<img src=x onerror=alert(1)>')] }));
    expect(html).not.toContain('<img');
    expect(html).toContain('&lt;img');
  });

  it('never renders case form keys outside the schema', () => {
    const leaked = { ...caseForm(), patient_name: 'Kwame Asante', folder_no: 'A-1192' };
    const html = renderThread(detail({ case_form: leaked as never }));
    expect(html).toContain('recurrent haematuria');
    expect(html).not.toContain('Kwame Asante');
    expect(html).not.toContain('A-1192');
    expect(html).not.toContain('patient_name');
  });

  it('offers escalation only on open consultations', () => {
    expect(renderThread(detail())).toContain('data-action="escalate"');
    expect(renderThread(detail({ kind: 'discussion' }))).not.toContain('data-action="escalate"');
    expect(renderThread(detail({ status: 'escalated' }))).not.toContain('data-action="escalate"');
  });

  it('flags a stub thread whose case data is still in transit', () => {
    const html = renderThread(detail({ stub: true, case_form: null }));
    expect(html).toContain('stub-banner');
  });

  it('describes every target shape in routing history', () => {
    expect(describeTarget({ doctor: 'ama' })).toBe('to ama');
    expect(describeTarget({ group: 'g-uro' })).toBe('to group g-uro');
    expect(describeTarget({ department: { hospital: 'kbth', specialty: 'urology' } })).toBe(
      'to urology at kbth',
    );
  });
});
