"""Digit-pattern template engine for residue classifications.

A pattern family describes index sets of the form

    n = (c_1 p^{i_1} + c_2 p^{i_2} + ... + c_r p^{i_r} + add) / div

with a strict-decrease chain i_1 > i_2 > ... > i_r constrained by per-step
minimum gaps and a floor on the last exponent.  Manifests bundle families
with their expected residues, keyed by corollary item labels, and are checked
against residue tables by exhaustive enumeration below a bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

__all__ = ["PatternFamily", "Manifest", "enumerate_family", "load_manifest", "check_manifest"]


@dataclass(frozen=True)
class PatternFamily:
    coeffs: tuple[int, ...] = ()
    gaps: tuple[int, ...] = ()      # i_j >= i_{j+1} + gaps[j]
    min_last: int = 0               # i_r >= min_last
    add: int = 0
    div: int = 1
    literals: tuple[int, ...] = ()  # explicit n values

    @classmethod
    def from_json(cls, obj: dict) -> "PatternFamily":
        return cls(
            coeffs=tuple(obj.get("coeffs", ())),
            gaps=tuple(obj.get("gaps", ())),
            min_last=obj.get("min_last", 0),
            add=obj.get("add", 0),
            div=obj.get("div", 1),
            literals=tuple(obj.get("literals", ())),
        )


def enumerate_family(fam: PatternFamily, p: int, n_max: int) -> set[int]:
    """All n <= n_max matched by the family (exhaustive, with pruning)."""
    out = {n for n in fam.literals if 0 <= n <= n_max}
    r = len(fam.coeffs)
    if r == 0:
        return out
    if len(fam.gaps) != r - 1:
        raise ValueError("gaps must have one entry fewer than coeffs")
    bound = n_max * fam.div - fam.add

    def rec(pos: int, min_exp: int, partial: int):
        # pos runs from the last coefficient towards the first
        c = fam.coeffs[pos]
        e = min_exp
        val = c * p**e
        while partial + val <= bound:
            total = partial + val
            if pos == 0:
                num = total + fam.add
                if num >= 0:
                    if num % fam.div:
                        raise AssertionError(
                            f"family {fam} generated a non-divisible index {total}"
                        )
                    n = num // fam.div
                    if 0 <= n <= n_max:
                        out.add(n)
            else:
                rec(pos - 1, e + fam.gaps[pos - 1], total)
            e += 1
            val *= p

    rec(r - 1, fam.min_last, 0)
    return out


@dataclass
class Manifest:
    """Expected residues: items (label, residue, families), a 'never' list,
    and the fallback residue (0) for indices matched by no family."""

    modulus: int
    items: list = field(default_factory=list)  # (label, residue, [PatternFamily])
    never: tuple[int, ...] = ()
    n_min: int = 0

    @classmethod
    def from_json(cls, obj: dict) -> "Manifest":
        items = [
            (it["label"], it["residue"], [PatternFamily.from_json(f) for f in it["families"]])
            for it in obj["items"]
        ]
        return cls(
            modulus=obj["modulus"],
            items=items,
            never=tuple(obj.get("never", ())),
            n_min=obj.get("n_min", 0),
        )

    def expected(self, p: int, n_max: int) -> dict[int, int]:
        """n -> residue for every n in [n_min, n_max]; unmatched n get 0.

        Conflicting family overlaps raise (the classifications are iff-
        partitions, so overlap would be a data-entry error).
        """
        out = {n: 0 for n in range(self.n_min, n_max + 1)}
        claimed: dict[int, str] = {}
        for label, residue, fams in self.items:
            for fam in fams:
                for n in enumerate_family(fam, p, n_max):
                    if n < self.n_min:
                        continue
                    if n in claimed and out[n] != residue:
                        raise AssertionError(
                            f"overlap: n={n} claimed by {claimed[n]} and {label}"
                        )
                    claimed[n] = label
                    out[n] = residue
        return out


def load_manifest(name: str) -> Manifest:
    """Load a bundled manifest (e.g. 'noncrossing_mod27')."""
    text = resources.files("phimod.data").joinpath(f"{name}.json").read_text()
    return Manifest.from_json(json.loads(text))


def check_manifest(manifest: Manifest, p: int, table, n_max: int | None = None):
    """Compare a residue table against the manifest's iff-classification.

    Returns a list of (n, expected, got) mismatches (empty = clean), checking
    also that the 'never' residues do not occur.
    """
    if table.modulus != manifest.modulus:
        raise ValueError("table modulus does not match manifest")
    n_top = len(table) - 1 if n_max is None else n_max
    expected = manifest.expected(p, n_top)
    bad = []
    for n in range(manifest.n_min, n_top + 1):
        got = table[n]
        want = expected[n]
        if got != want:
            bad.append((n, want, got))
        elif got in manifest.never:
            bad.append((n, -1, got))
    return bad
