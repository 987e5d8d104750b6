/** Split context text into before/span/after for mention highlighting. */

export interface HighlightParts {
  before: string;
  span: string;
  after: string;
  valid: boolean;
}

/**
 * Offsets are code-point-style character indices into the context text.
 * Out-of-range or inverted offsets yield the untouched text plus a
 * validity flag so the UI can show a data-warning badge instead of a
 * wrong highlight.
 */
export function splitHighlight(text: string, start: number, end: number): HighlightParts {
  if (start < 0 || end > text.length || start >= end) {
    return { before: text, span: "", after: "", valid: false };
  }
  return {
    before: text.slice(0, start),
    span: text.slice(start, end),
    after: text.slice(end),
    valid: true,
  };
}
