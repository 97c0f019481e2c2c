"""Deterministic rule-based sentence segmentation.

The splitter recognizes a boundary at a run of terminator characters
(``.  !  ?``), optionally followed by closing quotes or brackets, followed by
whitespace and a character that can open a sentence (uppercase letter, digit,
opening quote/bracket, or a section sign). A single period is suppressed when
the token before it looks like an abbreviation; ``!`` and ``?`` always split.

When an abbreviation guard and a boundary signal conflict, the guard wins.
The exact behavior is pinned by a hand-segmented fixture corpus; change the
corpus first if the rules ever need to move.
"""

from __future__ import annotations

from .errors import EmptyInputError

_TERMINATORS = ".!?"
_CLOSERS = "\"')]}”’»"
_OPENERS = "\"'“‘([{«§$"

# Lowercased, period-stripped tokens that never end a sentence. Single
# letters and tokens with internal periods (e.g, i.i.d, U.S) are guarded by
# shape rather than listed.
_GUARDS = frozenset(
    """
    cf vs et al etc fig figs eq eqs tab tabs sec secs alg algs
    dr prof mr mrs ms st jr sr ca resp approx ref refs vol vols
    pp ch chs dept univ inc ltd co corp proc conf ver rev
    jan feb mar apr jun jul aug sep sept oct nov dec ed eds trans
    """.split()
)


def segment_sentences(text: str) -> list[str]:
    """Split ``text`` into sentences; raises EmptyInputError on blank input.

    Outputs are stripped of surrounding whitespace but otherwise verbatim:
    joining them reproduces every non-whitespace character of the input in
    order.
    """
    if not text or not text.strip():
        raise EmptyInputError("cannot segment empty or whitespace-only text")

    n = len(text)
    cuts: list[tuple[int, int]] = []  # (end of sentence, start of next)
    i = 0
    while i < n:
        if text[i] not in _TERMINATORS:
            i += 1
            continue
        j = i
        while j < n and text[j] in _TERMINATORS:
            j += 1
        run = text[i:j]
        k = j
        while k < n and text[k] in _CLOSERS:
            k += 1
        if k >= n or not text[k].isspace():
            i = j
            continue
        m = k
        while m < n and text[m].isspace():
            m += 1
        if m >= n:
            i = j
            continue
        opener = text[m]
        if not (opener.isupper() or opener.isdigit() or opener in _OPENERS):
            i = j
            continue
        if run == "." and _guarded(text, i, opener):
            i = j
            continue
        cuts.append((k, m))
        i = m

    pieces: list[str] = []
    start = 0
    for end, nxt in cuts:
        pieces.append(text[start:end])
        start = nxt
    pieces.append(text[start:])
    return [p.strip() for p in pieces if p.strip()]


def _guarded(text: str, period_index: int, next_char: str) -> bool:
    """True when the token ending at ``period_index`` suppresses the split."""
    s = period_index
    while s > 0 and not text[s - 1].isspace():
        s -= 1
    word = text[s:period_index].lstrip(_OPENERS)
    if not word:
        return False
    if "." in word:
        return True
    if len(word) == 1 and word.isalpha():
        return True
    lower = word.lower()
    if lower == "no":
        # "no." is only an abbreviation when a number follows
        return next_char.isdigit()
    return lower in _GUARDS
