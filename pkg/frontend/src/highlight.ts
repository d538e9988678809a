/**
 * Split document text into renderable segments around mark spans.
 *
 * The invariant the tests pin down: concatenating the segments' text always
 * reproduces the document exactly, so the highlighted view shows the same
 * characters the server holds. Primary spans carry their mark; secondary
 * spans (repeat occurrences that stay literal in the template) are flagged
 * so the view can style them differently.
 */

import type { MarkPayload } from "./api.js";

export interface Segment {
  text: string;
  start: number;
  end: number;
  /** The mark whose span produced this segment, null for plain text. */
  mark: MarkPayload | null;
  /** True when this is a repeat occurrence, not the substitution site. */
  secondary: boolean;
}

interface Interval {
  start: number;
  end: number;
  mark: MarkPayload;
  secondary: boolean;
}

export function segmentText(text: string, marks: MarkPayload[]): Segment[] {
  const intervals: Interval[] = [];
  for (const mark of marks) {
    intervals.push({
      start: mark.span.start,
      end: mark.span.end,
      mark,
      secondary: false,
    });
    for (const span of mark.secondary_spans) {
      intervals.push({ start: span.start, end: span.end, mark, secondary: true });
    }
  }
  intervals.sort((a, b) => a.start - b.start || a.end - b.end);

  const segments: Segment[] = [];
  let cursor = 0;
  for (const interval of intervals) {
    // Accepted marks never overlap; clamp defensively so malformed input
    // still yields segments that concatenate back to the full text.
    const start = Math.max(interval.start, cursor);
    const end = Math.min(interval.end, text.length);
    if (end <= start) continue;
    if (start > cursor) {
      segments.push({
        text: text.slice(cursor, start),
        start: cursor,
        end: start,
        mark: null,
        secondary: false,
      });
    }
    segments.push({
      text: text.slice(start, end),
      start,
      end,
      mark: interval.mark,
      secondary: interval.secondary,
    });
    cursor = end;
  }
  if (cursor < text.length) {
    segments.push({
      text: text.slice(cursor),
      start: cursor,
      end: text.length,
      mark: null,
      secondary: false,
    });
  }
  return segments;
}

/** Marks whose primary span covers the given text offset. */
export function marksAt(offset: number, marks: MarkPayload[]): MarkPayload[] {
  return marks.filter((m) => m.span.start <= offset && offset < m.span.end);
}
