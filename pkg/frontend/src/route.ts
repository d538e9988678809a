/** URL-hash routing: the active job id lives in the fragment. */

const HASH_RE = /^#\/jobs\/([^/]+)$/;

export function jobIdFromHash(hash: string): string | null {
  const match = HASH_RE.exec(hash);
  return match ? decodeURIComponent(match[1]) : null;
}

export function hashForJob(jobId: string): string {
  return `#/jobs/${encodeURIComponent(jobId)}`;
}
