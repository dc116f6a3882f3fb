"""Token alignment and masked-sequence construction.

Ground-truth masked sequences are derived from an (original, edited) token
pair: tokens on the longest common subsequence are kept, everything else
becomes a ``<mask>`` placeholder, insertions contribute a ``<mask>`` in the
gap where they occur, and consecutive placeholders are merged into one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .cad_seq import MASK_TOKEN, detokenize
from .errors import FillArityMismatch


@dataclass(frozen=True)
class Alignment:
    """Matched token positions (0-based), strictly increasing in both."""

    pairs: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class MaskedSequence:
    tokens: tuple[str, ...]

    @property
    def mask_count(self) -> int:
        return sum(1 for t in self.tokens if t == MASK_TOKEN)

    @classmethod
    def from_tokens(cls, tokens, merge_adjacent: bool = True) -> "MaskedSequence":
        """Build from raw tokens, merging runs of <mask> into one."""
        if not merge_adjacent:
            return cls(tuple(tokens))
        out = []
        for tok in tokens:
            if tok == MASK_TOKEN and out and out[-1] == MASK_TOKEN:
                continue
            out.append(tok)
        return cls(tuple(out))

    def text(self) -> str:
        return detokenize(self.tokens)

    def segments(self):
        """Non-mask token runs: mask_count + 1 tuples, empty at the ends
        when the sequence starts or ends with a mask."""
        segs = [[]]
        for tok in self.tokens:
            if tok == MASK_TOKEN:
                segs.append([])
            else:
                segs[-1].append(tok)
        return [tuple(s) for s in segs]


def lcs(a, b) -> Alignment:
    """Longest common subsequence of two token lists.

    Deterministic: the walk runs front to back over the suffix DP table,
    equal tokens are always matched (they are always on an optimal path),
    and on ties the original-sequence token is skipped first.  This keeps
    matches as early as possible, so pure insertions land in trailing gaps.
    """
    a = list(a)
    b = list(b)
    n, m = len(a), len(b)
    # suf[i][j] = LCS length of a[i:] vs b[j:].  O(n*m) ints.
    suf = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        ai = a[i]
        row = suf[i]
        nxt = suf[i + 1]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                down = nxt[j]
                right = row[j + 1]
                row[j] = down if down >= right else right
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif suf[i + 1][j] >= suf[i][j + 1]:
            i += 1
        else:
            j += 1
    return Alignment(tuple(pairs))


def _gap_walk(orig, edit):
    """Decompose (orig, edit) into matched runs and gap fills.

    Yields the masked token stream and, for every emitted mask, the edit
    tokens that belong in that gap.
    """
    orig = list(orig)
    edit = list(edit)
    alignment = lcs(orig, edit)
    tokens: list[str] = []
    fills: list[list[str]] = []
    oi = ei = 0
    for (mo, me) in alignment.pairs:
        if oi < mo or ei < me:
            tokens.append(MASK_TOKEN)
            fills.append(edit[ei:me])
        tokens.append(orig[mo])
        oi, ei = mo + 1, me + 1
    if oi < len(orig) or ei < len(edit):
        tokens.append(MASK_TOKEN)
        fills.append(edit[ei:])
    return MaskedSequence(tuple(tokens)), fills


def make_gt_mask(orig, edit) -> MaskedSequence:
    """Ground-truth masked sequence for an (original, edited) token pair."""
    masked, _ = _gap_walk(orig, edit)
    return masked


def make_gt_mask_with_fills(orig, edit):
    """Like make_gt_mask, but also returns the per-mask fills that
    reconstruct ``edit`` via realize()."""
    return _gap_walk(orig, edit)


def can_realize(masked: MaskedSequence, target) -> bool:
    """True iff some choice of fills turns ``masked`` into ``target``.

    Equivalently: the non-mask segments of ``masked`` occur in ``target``
    in order as contiguous runs, anchored at the start/end unless a mask
    sits there.  Gaps (the fills) may be empty.
    """
    target = tuple(target)
    segs = masked.segments()
    if len(segs) == 1:
        return segs[0] == target
    if any(len(s) == 0 for s in segs[1:-1]):
        return False  # adjacent masks violate the type invariant
    n = len(target)

    def occurs_at(seg, pos):
        return target[pos:pos + len(seg)] == seg

    @lru_cache(maxsize=None)
    def place(si, pos):
        seg = segs[si]
        last = si == len(segs) - 1
        if last:
            if not seg:  # trailing mask absorbs the rest
                return True
            # anchored at the end
            return pos <= n - len(seg) and target[n - len(seg):] == seg
        start = pos
        if si == 0:
            if not seg:  # leading mask
                return place(1, 0)
            if not occurs_at(seg, 0):
                return False
            return place(1, len(seg))
        while start <= n - len(seg):
            if occurs_at(seg, start) and place(si + 1, start + len(seg)):
                return True
            start += 1
        return False

    return place(0, 0)


def verify_consistency(orig, masked: MaskedSequence) -> bool:
    """True iff ``masked`` is ``orig`` with whole spans replaced by <mask>."""
    return can_realize(masked, orig)


def realize(masked: MaskedSequence, fills) -> list[str]:
    """Replace each <mask> in order with its fill (empty fill = deletion)."""
    fills = [list(f) for f in fills]
    if len(fills) != masked.mask_count:
        raise FillArityMismatch(f"{masked.mask_count} masks but {len(fills)} fills")
    out: list[str] = []
    fi = 0
    for tok in masked.tokens:
        if tok == MASK_TOKEN:
            out.extend(fills[fi])
            fi += 1
        else:
            out.append(tok)
    return out
