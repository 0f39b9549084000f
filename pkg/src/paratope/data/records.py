"""Core record types for antibody-antigen complexes, plus the line-delimited
JSON dataset format.

One dataset line is one complex:

    {"id": "...", "resolution": 2.4,
     "cdrs": [{"chain": "H1", "sequence": "GFTFSDYY",
               "labels": [0,1,...], "coords": [[x,y,z], ...]}, ...],
     "antigen": {"sequence": "...", "coords": [[x,y,z], ...]},
     "neighborhoods": [[[0,1,2], ...], ...]}

``resolution``, all ``coords`` and ``neighborhoods`` are optional.
``neighborhoods`` holds, per CDR, one antigen index list per residue.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ParseError, ValidationError
from .residues import CHAIN_IDS, canonical_residues

MAX_CDR_LENGTH = 32
MAX_ANTIGEN_LENGTH = 1269
MAX_NEIGHBORS = 150

Coord = tuple[float, float, float]


def _check_coords(coords, n: int, what: str) -> tuple[Coord, ...] | None:
    if coords is None:
        return None
    coords = tuple(tuple(float(v) for v in xyz) for xyz in coords)
    if len(coords) != n:
        raise ValidationError(f"{what}: {len(coords)} coordinates for {n} residues")
    for xyz in coords:
        if len(xyz) != 3 or not all(math.isfinite(v) for v in xyz):
            raise ValidationError(f"{what}: coordinates must be finite [x, y, z] triples")
    return coords


@dataclass(frozen=True)
class CdrSequence:
    """One CDR loop: residues with per-residue binding labels (1 = binding)."""

    chain: str
    residues: str
    labels: tuple[int, ...]
    coords: tuple[Coord, ...] | None = None

    def __post_init__(self):
        if self.chain not in CHAIN_IDS:
            raise ValidationError(f"unknown chain id {self.chain!r}")
        object.__setattr__(self, "residues", canonical_residues(self.residues))
        if not 1 <= len(self.residues) <= MAX_CDR_LENGTH:
            raise ValidationError(
                f"CDR {self.chain}: length {len(self.residues)} outside [1, {MAX_CDR_LENGTH}]")
        labels = tuple(int(v) for v in self.labels)
        if len(labels) != len(self.residues):
            raise ValidationError(
                f"CDR {self.chain}: {len(labels)} labels for {len(self.residues)} residues")
        if any(v not in (0, 1) for v in labels):
            raise ValidationError(f"CDR {self.chain}: labels must be 0 or 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "coords", _check_coords(self.coords, len(self.residues),
                                                         f"CDR {self.chain}"))

    def __len__(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class AntigenSequence:
    """Full antigen residue sequence with optional per-residue coordinates."""

    residues: str
    coords: tuple[Coord, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "residues", canonical_residues(self.residues))
        if not 1 <= len(self.residues) <= MAX_ANTIGEN_LENGTH:
            raise ValidationError(
                f"antigen length {len(self.residues)} outside [1, {MAX_ANTIGEN_LENGTH}]")
        object.__setattr__(self, "coords", _check_coords(self.coords, len(self.residues),
                                                         "antigen"))

    def __len__(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class Neighborhood:
    """Per antibody residue, the set of antigen indices it may attend over."""

    indices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cleaned = []
        for i, idx in enumerate(self.indices):
            idx = tuple(sorted(int(j) for j in idx))
            if len(idx) > MAX_NEIGHBORS:
                raise ValidationError(
                    f"neighborhood of residue {i} has {len(idx)} members (cap {MAX_NEIGHBORS})")
            if any(j < 0 for j in idx):
                raise ValidationError(f"neighborhood of residue {i} has negative indices")
            if len(set(idx)) != len(idx):
                raise ValidationError(f"neighborhood of residue {i} has duplicate indices")
            cleaned.append(idx)
        object.__setattr__(self, "indices", tuple(cleaned))

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Complex:
    """One antibody-antigen pair: CDRs, antigen, optional neighborhoods."""

    id: str
    cdrs: tuple[CdrSequence, ...]
    antigen: AntigenSequence
    neighborhoods: tuple[Neighborhood, ...] | None = None
    resolution: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "cdrs", tuple(self.cdrs))
        if not self.cdrs:
            raise ValidationError(f"complex {self.id}: needs at least one CDR")
        if self.neighborhoods is not None:
            nbh = tuple(self.neighborhoods)
            if len(nbh) != len(self.cdrs):
                raise ValidationError(
                    f"complex {self.id}: {len(nbh)} neighborhoods for {len(self.cdrs)} CDRs")
            for cdr, hood in zip(self.cdrs, nbh):
                if len(hood) != len(cdr):
                    raise ValidationError(
                        f"complex {self.id}: neighborhood size {len(hood)} for CDR length {len(cdr)}")
                for idx in hood.indices:
                    if any(j >= len(self.antigen) for j in idx):
                        raise ValidationError(
                            f"complex {self.id}: neighborhood index beyond antigen length")
            object.__setattr__(self, "neighborhoods", nbh)

    @property
    def antibody_sequence(self) -> str:
        """Concatenated CDR residues in chain order; the unit sequence-identity
        filtering compares."""
        return "".join(c.residues for c in sorted(self.cdrs, key=lambda c: c.chain))

    @property
    def positive_label_count(self) -> int:
        return sum(sum(c.labels) for c in self.cdrs)


# ---------------------------------------------------------------------------
# line-delimited JSON reader / writer
# ---------------------------------------------------------------------------

def _complex_from_record(rec: dict, where: str) -> Complex:
    def need(obj, key, ctx):
        if key not in obj:
            raise ParseError(f"{where}: missing field {key!r} in {ctx}")
        return obj[key]

    if not isinstance(rec, dict):
        raise ParseError(f"{where}: record must be an object")
    cid = str(need(rec, "id", "record"))
    cdr_recs = need(rec, "cdrs", "record")
    ag_rec = need(rec, "antigen", "record")
    try:
        cdrs = tuple(
            CdrSequence(
                chain=need(c, "chain", "cdr"),
                residues=need(c, "sequence", "cdr"),
                labels=need(c, "labels", "cdr"),
                coords=c.get("coords"),
            )
            for c in cdr_recs
        )
        antigen = AntigenSequence(
            residues=need(ag_rec, "sequence", "antigen"),
            coords=ag_rec.get("coords"),
        )
        hoods = rec.get("neighborhoods")
        if hoods is not None:
            hoods = tuple(Neighborhood(tuple(tuple(x) for x in h)) for h in hoods)
        resolution = rec.get("resolution")
        return Complex(
            id=cid,
            cdrs=cdrs,
            antigen=antigen,
            neighborhoods=hoods,
            resolution=None if resolution is None else float(resolution),
        )
    except ValidationError as exc:
        raise ValidationError(f"{where} (complex {cid}): {exc}") from exc


def parse_dataset(path, format: str = "jsonl") -> list[Complex]:
    """Read a dataset file into validated complexes.

    Errors carry the 1-based line number and the offending field.
    """
    if format != "jsonl":
        raise ValueError(f"unknown dataset format {format!r}")
    path = Path(path)
    complexes = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON ({exc.msg})") from exc
            complexes.append(_complex_from_record(rec, where))
    return complexes


def _complex_to_record(cx: Complex) -> dict:
    rec: dict = {"id": cx.id}
    if cx.resolution is not None:
        rec["resolution"] = cx.resolution
    rec["cdrs"] = [
        {
            "chain": c.chain,
            "sequence": c.residues,
            "labels": list(c.labels),
            **({"coords": [list(x) for x in c.coords]} if c.coords else {}),
        }
        for c in cx.cdrs
    ]
    rec["antigen"] = {"sequence": cx.antigen.residues}
    if cx.antigen.coords:
        rec["antigen"]["coords"] = [list(x) for x in cx.antigen.coords]
    if cx.neighborhoods is not None:
        rec["neighborhoods"] = [[list(idx) for idx in h.indices] for h in cx.neighborhoods]
    return rec


def write_dataset(path, complexes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for cx in complexes:
            fh.write(json.dumps(_complex_to_record(cx)) + "\n")
