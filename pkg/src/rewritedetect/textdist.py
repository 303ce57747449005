"""Character-level edit distance, rewrite similarity, and alignment diffs.

Distances are computed over Unicode scalar values (one unit per code
point), which matches ``len()`` on Python strings.  The distance path uses
a two-row DP and handles texts up to 32k characters; ``diff`` materializes
the full op matrix and is intended for paragraph-sized inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._kernels import OP_DEL, OP_INS, OP_KEEP, OP_SUB, edit_ops, levenshtein_codes

KEEP = "keep"
DELETE = "delete"
INSERT = "insert"

# Full op matrix for diff is capped to keep allocations sane (~0.5 GB).
_MAX_DIFF_CELLS = 512_000_000

_ANSI_DELETE = "\x1b[31m"  # red, matching the usual deleted-text convention
_ANSI_INSERT = "\x1b[34m"  # blue for insertions
_ANSI_RESET = "\x1b[0m"


class Span(NamedTuple):
    """One diff span: ``op`` is ``keep``, ``delete`` or ``insert``."""

    op: str
    text: str


def _codepoints(s: str) -> np.ndarray:
    # utf-32-le yields exactly one uint32 per code point; surrogatepass
    # keeps the mapping total on any Python str.
    return np.frombuffer(s.encode("utf-32-le", "surrogatepass"), dtype="<u4").astype(np.int32)


def _common_affix(a: np.ndarray, b: np.ndarray) -> tuple[int, int]:
    """Lengths of the common prefix and suffix (non-overlapping)."""
    n = min(a.shape[0], b.shape[0])
    pre = 0
    if n:
        neq = a[:n] != b[:n]
        pre = int(neq.argmax()) if neq.any() else n
    ra = a[pre:][::-1]
    rb = b[pre:][::-1]
    n = min(ra.shape[0], rb.shape[0])
    suf = 0
    if n:
        neq = ra[:n] != rb[:n]
        suf = int(neq.argmax()) if neq.any() else n
    return pre, suf


def levenshtein(a: str, b: str) -> int:
    """Exact minimum number of unit-cost inserts, deletes and substitutions."""
    if a == b:
        return 0
    ca = _codepoints(a)
    cb = _codepoints(b)
    pre, suf = _common_affix(ca, cb)
    ca = ca[pre : ca.shape[0] - suf]
    cb = cb[pre : cb.shape[0] - suf]
    if ca.shape[0] == 0:
        return int(cb.shape[0])
    if cb.shape[0] == 0:
        return int(ca.shape[0])
    return int(levenshtein_codes(ca, cb))


def similarity(original: str, rewrite: str) -> float:
    """Rewrite similarity in [0, 1]: one minus the normalized edit distance.

    Normalizer is the longer text's length; two empty texts score 1.0.
    A value of 1 means the rewrite left the text untouched.
    """
    longer = max(len(original), len(rewrite))
    if longer == 0:
        return 1.0
    return 1.0 - levenshtein(original, rewrite) / longer


def diff(original: str, rewrite: str) -> list[Span]:
    """Character diff derived from one optimal edit-distance alignment.

    Substitutions appear as paired delete+insert spans.  Ties among optimal
    alignments are broken deterministically (keep, then delete, insert,
    substitute), so the output is reproducible.
    """
    if original == rewrite:
        return [Span(KEEP, original)] if original else []
    ca = _codepoints(original)
    cb = _codepoints(rewrite)
    pre, suf = _common_affix(ca, cb)
    core_a = original[pre : len(original) - suf]
    core_b = rewrite[pre : len(rewrite) - suf]
    spans: list[Span] = []
    if pre:
        spans.append(Span(KEEP, original[:pre]))
    spans.extend(_traceback(core_a, core_b))
    if suf:
        spans.append(Span(KEEP, original[len(original) - suf :]))
    return _merge(spans)


def _traceback(a: str, b: str) -> list[Span]:
    n = len(a)
    m = len(b)
    if n == 0:
        return [Span(INSERT, b)] if m else []
    if m == 0:
        return [Span(DELETE, a)]
    if (n + 1) * (m + 1) > _MAX_DIFF_CELLS:
        raise ValueError(
            f"diff op matrix would need {(n + 1) * (m + 1)} cells; "
            "inputs are too large for full-alignment diffing"
        )
    ops = edit_ops(_codepoints(a), _codepoints(b))
    # Walk back from (n, m); record consumed index ranges, emit forward.
    steps: list[int] = []
    i, j = n, m
    while i > 0 or j > 0:
        op = int(ops[i, j])
        steps.append(op)
        if op == OP_KEEP or op == OP_SUB:
            i -= 1
            j -= 1
        elif op == OP_DEL:
            i -= 1
        else:
            j -= 1
    steps.reverse()

    spans: list[Span] = []
    ai = bi = 0
    k = 0
    while k < len(steps):
        if steps[k] == OP_KEEP:
            start = ai
            while k < len(steps) and steps[k] == OP_KEEP:
                ai += 1
                bi += 1
                k += 1
            spans.append(Span(KEEP, a[start:ai]))
        else:
            a_start = ai
            b_start = bi
            while k < len(steps) and steps[k] != OP_KEEP:
                op = steps[k]
                if op == OP_SUB:
                    ai += 1
                    bi += 1
                elif op == OP_DEL:
                    ai += 1
                else:
                    bi += 1
                k += 1
            if ai > a_start:
                spans.append(Span(DELETE, a[a_start:ai]))
            if bi > b_start:
                spans.append(Span(INSERT, b[b_start:bi]))
    return spans


def _merge(spans: list[Span]) -> list[Span]:
    merged: list[Span] = []
    for span in spans:
        if not span.text:
            continue
        if merged and merged[-1].op == span.op:
            merged[-1] = Span(span.op, merged[-1].text + span.text)
        else:
            merged.append(span)
    return merged


def apply_diff(original: str, script: list[Span]) -> str:
    """Replay a diff against its original text, returning the rewrite.

    Raises ValueError when the script's keep/delete spans do not
    reconstruct ``original`` exactly.
    """
    out: list[str] = []
    pos = 0
    for op, text in script:
        if op == KEEP:
            if original[pos : pos + len(text)] != text:
                raise ValueError(f"keep span mismatch at offset {pos}")
            out.append(text)
            pos += len(text)
        elif op == DELETE:
            if original[pos : pos + len(text)] != text:
                raise ValueError(f"delete span mismatch at offset {pos}")
            pos += len(text)
        elif op == INSERT:
            out.append(text)
        else:
            raise ValueError(f"unknown diff op {op!r}")
    if pos != len(original):
        raise ValueError("script does not cover the full original text")
    return "".join(out)


def edit_count(script: list[Span]) -> int:
    """Edited characters with paired substitutions counted once.

    Each maximal run of non-keep spans contributes max(deleted, inserted)
    characters; for scripts produced by ``diff`` this equals the
    Levenshtein distance of the two texts.
    """
    total = 0
    run_del = run_ins = 0
    for op, text in script:
        if op == KEEP:
            total += max(run_del, run_ins)
            run_del = run_ins = 0
        elif op == DELETE:
            run_del += len(text)
        else:
            run_ins += len(text)
    return total + max(run_del, run_ins)


def similarity_from_diff(script: list[Span]) -> float:
    """Recompute the similarity score from a diff script alone."""
    orig_len = sum(len(t) for op, t in script if op != INSERT)
    rew_len = sum(len(t) for op, t in script if op != DELETE)
    longer = max(orig_len, rew_len)
    if longer == 0:
        return 1.0
    return 1.0 - edit_count(script) / longer


def render_diff(script: list[Span], color: bool = True) -> str:
    """Render a diff for terminals: red deletions and blue insertions, or
    ``[-...-]`` / ``{+...+}`` tags when color is off."""
    parts: list[str] = []
    for op, text in script:
        if op == KEEP:
            parts.append(text)
        elif op == DELETE:
            parts.append(f"{_ANSI_DELETE}{text}{_ANSI_RESET}" if color else f"[-{text}-]")
        else:
            parts.append(f"{_ANSI_INSERT}{text}{_ANSI_RESET}" if color else f"{{+{text}+}}")
    return "".join(parts)
