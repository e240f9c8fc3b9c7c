// Rendering is string concatenation; everything dynamic passes through esc().

const REPLACEMENTS: Record<string, string> = {
  '&': '&amp;',
  '<': '&lt;',
  '>': '&gt;',
  '"': '&quot;',
  "'": '&#39;',
};

export function esc(value: unknown): string {
  return String(value ?? '').replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch] as string);
}

/** hlc timestamps look like "1786815247759:0:accra"; show the wall part */
export function formatStamp(encoded: string): string {
  const ms = Number(encoded.split(':')[0]);
  if (!Number.isFinite(ms) || ms <= 0) return '';
  return new Date(ms).toISOString().replace('T', ' ').slice(0, 16);
}
