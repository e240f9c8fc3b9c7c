// Wire types for /api/v1. These mirror the server's JSON exactly; the
// client invents no fields of its own.

export interface Contact {
  email: string | null;
  phone: string | null;
}

export interface Doctor {
  id: string;
  display_name: string;
  hospital: string;
  specialties: string[];
  country: string;
  seniority: string;
  contact: Contact;
  is_admin: boolean;
}

/**
 * The complete case form schema. Deliberately non-identifying: there is
 * no name, address, or patient identifier field, and the client must
 * never render a key outside this list even if one arrives on the wire.
 */
export const CASE_FORM_FIELDS = [
  'age_band',
  'sex',
  'clinical_history',
  'specialization_requested',
  'attachments',
] as const;

export type CaseFormField = (typeof CASE_FORM_FIELDS)[number];

export interface CaseForm {
  age_band: string;
  sex: string;
  clinical_history: string;
  specialization_requested: string | null;
  attachments: string[];
}

export const AGE_BANDS = [
  '0-9', '10-19', '20-29', '30-39', '40-49',
  '50-59', '60-69', '70-79', '80-89', '90+',
  'unspecified',
] as const;

export const SEXES = ['female', 'male', 'unspecified'] as const;

export type ThreadKind = 'consultation' | 'discussion' | 'referral';
export type ThreadStatus = 'open' | 'escalated' | 'closed';

export type Target =
  | { doctor: string }
  | { group: string }
  | { department: { hospital: string; specialty: string } };

export interface Assignment {
  target: Target;
  assigned_by: string;
  at: string;
}

export interface ThreadSummary {
  id: string;
  kind: ThreadKind;
  creator: string;
  created_at: string;
  case_form: CaseForm | null;
  assignments: Assignment[];
  status: ThreadStatus;
  stub: boolean;
  last_activity: string;
  message_count: number;
  specialization: string | null;
}

export interface Message {
  id: string;
  thread: string;
  author: string;
  body: string;
  attachments: string[];
  at: string;
}

export interface ThreadDetail extends ThreadSummary {
  messages: Message[];
}

export interface ThreadLists {
  primary: ThreadSummary[];
  other: ThreadSummary[];
}

export interface ColleagueCandidate {
  doctor: string;
  name: string;
  specialties: string[];
  hospital: string;
  country: string;
}

/** The three side-by-side routing lists of the wizard's final step. */
export interface CandidateSet {
  colleagues: ColleagueCandidate[];
  groups: string[];
  group_names: Record<string, string>;
  departments: [string, string][];
}

export interface GroupEntry {
  id: string;
  name: string;
  kind: string;
  affiliation: string | null;
  member: boolean;
}

export interface PeerSyncStatus {
  last_success_ms: number;
  stale: boolean;
  consecutive_failures: number;
  next_retry_ms: number;
}

export interface SyncStatus {
  stale: boolean;
  peers: Record<string, PeerSyncStatus>;
}

export interface Session {
  token: string;
  doctor: string;
  expires_at: number;
}
