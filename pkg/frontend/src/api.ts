/**
 * Typed client for the medsync HTTP API.
 *
 * Every state change the UI makes goes through this module; the client
 * holds no authority of its own. The fetch function is injectable so
 * tests can run without a browser or a server.
 */

import type {
  CandidateSet,
  CaseForm,
  Doctor,
  GroupEntry,
  Message,
  Session,
  SyncStatus,
  Target,
  ThreadDetail,
  ThreadKind,
  ThreadLists,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

/** 401 from any authenticated route: the session is gone, log in again. */
export class SessionExpiredError extends ApiError {
  constructor(detail: string) {
    super(401, detail);
  }
}

export interface ApiOptions {
  fetch?: FetchLike;
  /** Called once per expired session, before the error propagates. */
  onSessionExpired?: () => void;
}

export class MedsyncApi {
  private readonly fetchImpl: FetchLike;
  private readonly onSessionExpired?: () => void;
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string,
    opts: ApiOptions = {},
  ) {
    this.fetchImpl = opts.fetch ?? ((url, init) => fetch(url, init));
    this.onSessionExpired = opts.onSessionExpired;
  }

  setToken(token: string | null): void {
    this.token = token;
  }

  hasSession(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'content-type': 'application/json' };
    if (this.token) headers['authorization'] = `Bearer ${this.token}`;
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.baseUrl}/api/v1${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      // fetch only rejects on network trouble; surface it as status 0 so
      // callers can distinguish "retry later" from a server-side refusal
      throw new ApiError(0, err instanceof Error ? err.message : 'network failure');
    }
    if (resp.status === 401 && path !== '/login') {
      this.token = null;
      this.onSessionExpired?.();
      throw new SessionExpiredError(await detailOf(resp));
    }
    if (!resp.ok) throw new ApiError(resp.status, await detailOf(resp));
    return (await resp.json()) as T;
  }

  async login(doctor: string, secret: string): Promise<Session> {
    const session = await this.request<Session>('POST', '/login', { doctor, secret });
    this.token = session.token;
    return session;
  }

  me(): Promise<{ doctor: Doctor }> {
    return this.request('GET', '/me');
  }

  listThreads(): Promise<ThreadLists> {
    return this.request('GET', '/threads');
  }

  getThread(id: string): Promise<{ thread: ThreadDetail }> {
    return this.request('GET', `/threads/${encodeURIComponent(id)}`);
  }

  /** Thread plus first assignment in one request, as the wizard submits it. */
  createThread(
    kind: ThreadKind,
    caseForm: CaseForm,
    target: Target,
  ): Promise<{ thread: ThreadDetail }> {
    return this.request('POST', '/threads', {
      thread: { kind, case_form: caseForm },
      target,
    });
  }

  postMessage(threadId: string, body: string, attachments: string[] = []): Promise<{ message: Message }> {
    return this.request('POST', `/threads/${encodeURIComponent(threadId)}/messages`, {
      body,
      attachments,
    });
  }

  assign(threadId: string, target: Target): Promise<{ thread: ThreadDetail }> {
    return this.request('POST', `/threads/${encodeURIComponent(threadId)}/assignments`, { target });
  }

  escalate(threadId: string): Promise<{ thread: ThreadDetail }> {
    return this.request('POST', `/threads/${encodeURIComponent(threadId)}/escalate`);
  }

  consultants(specialty?: string): Promise<CandidateSet> {
    const q = specialty ? `?specialty=${encodeURIComponent(specialty)}` : '';
    return this.request('GET', `/consultants${q}`);
  }

  colleagues(): Promise<{ colleagues: Doctor[] }> {
    return this.request('GET', '/colleagues');
  }

  setColleague(to: string, present: boolean): Promise<{ ok: boolean }> {
    return this.request('PUT', '/colleagues', { to, present });
  }

  memberships(): Promise<{ groups: GroupEntry[] }> {
    return this.request('GET', '/memberships');
  }

  setMembership(group: string, member: boolean): Promise<{ ok: boolean }> {
    return this.request('PUT', '/memberships', { group, member });
  }

  syncStatus(): Promise<SyncStatus> {
    return this.request('GET', '/sync/status');
  }

  adminCreateGroup(group: {
    id: string;
    name: string;
    kind: string;
    affiliation?: string | null;
  }): Promise<{ group: string }> {
    return this.request('POST', '/admin/groups', { group });
  }
}

async function detailOf(resp: Response): Promise<string> {
  try {
    const data = (await resp.json()) as { detail?: unknown };
    if (typeof data.detail === 'string') return data.detail;
    return JSON.stringify(data.detail ?? data);
  } catch {
    return resp.statusText || `http ${resp.status}`;
  }
}
