"""Loading of the physical-constants file.

The file is plain ``key = value`` text; ``#`` starts a comment. The packaged
default lives in ``kaondecoh/data/constants.txt``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

__all__ = ["Constants", "load_constants", "DEFAULT_CONSTANTS"]


@dataclass(frozen=True)
class Constants:
    gamma_L: float  # Gamma_L / Gamma_S
    delta_m: float  # Delta m / Gamma_S
    gamma_S_mev: float
    tau_S_per_cm: float
    ctau_S_cm: float
    kaon_mass_mev: float

    def lambda_to_mev(self, lam: float) -> float:
        """Convert a decoherence strength from Gamma_S units to MeV."""
        return lam * self.gamma_S_mev

    def lambda_from_mev(self, lam_mev: float) -> float:
        return lam_mev / self.gamma_S_mev


def _parse(text: str, source: str) -> dict[str, float]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        try:
            values[key.strip()] = float(val)
        except ValueError:
            raise ValueError(f"{source}:{lineno}: value for {key.strip()!r} is not a number") from None
    return values


def load_constants(path: str | Path | None = None, **overrides: float) -> Constants:
    """Read a constants file; keyword ``overrides`` replace individual entries.

    Without ``path`` the packaged defaults are used. A user file only needs
    to list the keys it changes.
    """
    text = resources.files("kaondecoh").joinpath("data/constants.txt").read_text()
    values = _parse(text, "constants.txt")
    if path is not None:
        values.update(_parse(Path(path).read_text(), str(path)))
    values.update(overrides)
    known = {f.name for f in fields(Constants)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown constants: {sorted(unknown)}")
    return Constants(**values)


DEFAULT_CONSTANTS = load_constants()
