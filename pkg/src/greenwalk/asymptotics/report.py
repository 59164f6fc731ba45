"""Side-by-side comparison of Green-speed and entropy estimators."""

from __future__ import annotations

from dataclasses import dataclass, field

from .checks import (
    CheckResult,
    absolute_bound_check,
    green_speed_le_entropy_check,
    overlap_check,
    value_sigma,
)


@dataclass
class SpeedEntropyReport:
    """Every Green-speed estimate against every entropy estimate.

    Pairs drawn from the same estimator (the boundary integral serves both
    sides) are skipped.  ``absent`` names the sides with no estimator.
    """

    green_speed: dict[str, tuple[float, float]]
    entropy: dict[str, tuple[float, float]]
    checks: list[CheckResult] = field(default_factory=list)
    absent: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.absent and all(c.passed for c in self.checks)

    def table(self) -> list[tuple[str, str, float, float]]:
        """``(side, estimator, value, sigma)`` rows."""
        rows = [("green_speed", k, v, s) for k, (v, s) in self.green_speed.items()]
        return rows + [("entropy", k, v, s) for k, (v, s) in self.entropy.items()]


def speed_entropy_report(green_speed: dict, entropy: dict, *, absolute_bound: float | None = None) -> SpeedEntropyReport:
    """Overlap and one-sided checks between the two families of estimates.

    ``absolute_bound`` adds ``|value| <= bound`` checks on every estimate,
    used when both limits are known to vanish.
    """
    ls = {k: value_sigma(v) for k, v in green_speed.items()}
    hs = {k: value_sigma(v) for k, v in entropy.items()}
    rep = SpeedEntropyReport(ls, hs)
    if not ls:
        rep.absent.append("green_speed")
    if not hs:
        rep.absent.append("entropy")
    for lk, lv in ls.items():
        for hk, hv in hs.items():
            if lk == hk:
                continue
            labels = {"green_speed_estimator": lk, "entropy_estimator": hk}
            c = overlap_check(lv, hv, name="entropy_equals_green_speed")
            c.detail.update(labels)
            rep.checks.append(c)
            c = green_speed_le_entropy_check(hv, lv)
            c.detail.update(labels)
            rep.checks.append(c)
    if absolute_bound is not None:
        for side, family in (("green_speed", ls), ("entropy", hs)):
            for k, v in family.items():
                c = absolute_bound_check(v, absolute_bound, name="entropy_equals_green_speed")
                c.detail.update({"estimator": k, "side": side, "kind": "absolute_bound"})
                rep.checks.append(c)
    return rep
