"""CDR extraction from Chothia-numbered chains.

The loop windows below are the standard Chothia definitions, shipped as
configuration defaults; ``extend`` widens every window symmetrically for
pipelines that include flanking residues (default 0).
"""

from __future__ import annotations

from ..errors import ValidationError
from .records import MAX_CDR_LENGTH, CdrSequence

# chain kind -> CDR tag -> inclusive Chothia position window
CHOTHIA_WINDOWS: dict[str, dict[str, tuple[int, int]]] = {
    "heavy": {"H1": (26, 32), "H2": (52, 56), "H3": (95, 102)},
    "light": {"L1": (24, 34), "L2": (50, 56), "L3": (89, 97)},
}


def parse_position(pos) -> tuple[int, str]:
    """Split a Chothia position like 100 or "100A" into (number, insertion code)."""
    if isinstance(pos, int):
        return pos, ""
    text = str(pos).strip()
    digits = "".join(ch for ch in text if ch.isdigit())
    icode = text[len(digits):].upper()
    if not digits or not all(ch.isalpha() or ch == "" for ch in icode):
        raise ValidationError(f"malformed Chothia position {pos!r}")
    return int(digits), icode


def extract_cdrs(
    numbered_chain,
    chain_kind: str,
    windows: dict[str, dict[str, tuple[int, int]]] | None = None,
    extend: int = 0,
) -> list[CdrSequence]:
    """Pull the CDR loops out of a Chothia-numbered chain.

    ``numbered_chain`` is a list of (position, one-letter residue) pairs in
    strictly increasing position order, where positions may carry insertion
    codes ("52A").  Residues whose numeric part falls inside a window
    (inclusive, optionally extended) belong to that CDR.  Empty windows are
    skipped; the returned loops carry all-zero placeholder labels.
    """
    if chain_kind not in ("heavy", "light"):
        raise ValidationError(f"chain_kind must be 'heavy' or 'light', got {chain_kind!r}")
    table = (windows or CHOTHIA_WINDOWS)[chain_kind]

    parsed = [(parse_position(pos), str(aa)) for pos, aa in numbered_chain]
    for prev, cur in zip(parsed, parsed[1:]):
        if cur[0] <= prev[0]:
            raise ValidationError(
                f"positions not strictly increasing: {prev[0]} then {cur[0]}")

    cdrs = []
    for tag in sorted(table):
        lo, hi = table[tag]
        lo, hi = lo - extend, hi + extend
        residues = "".join(aa for (num, _), aa in parsed if lo <= num <= hi)
        if not residues:
            continue
        if len(residues) > MAX_CDR_LENGTH:
            raise ValidationError(
                f"CDR {tag} has {len(residues)} residues (max {MAX_CDR_LENGTH})")
        cdrs.append(CdrSequence(chain=tag, residues=residues, labels=(0,) * len(residues)))
    return cdrs
