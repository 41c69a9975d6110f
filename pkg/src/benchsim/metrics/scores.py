"""Task scoring formulas.

Exploration: success rate (percent) and step-normalized efficiency over
successful episodes. Social navigation: EFF/SRT/SAF/SNC components combined
as Total = 100 * (0.2*EFF + 0.2*SRT + 0.3*SAF + 0.3*SNC).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EFF_WEIGHT = 0.2
SRT_WEIGHT = 0.2
SAF_WEIGHT = 0.3
SNC_WEIGHT = 0.3
TYPE1_INTRUSION_WEIGHT = 1.0  # intimate-space time counts in full
TYPE2_INTRUSION_WEIGHT = 0.5  # personal-space time counts at half


def _field(outcome, name):
    if isinstance(outcome, dict):
        return outcome[name]
    return getattr(outcome, name)


@dataclass(frozen=True)
class ExplorationScore:
    n_total: int
    n_success: int
    sr: float                 # percent
    efficiency: float | None  # absent (None) when nothing succeeded


@dataclass(frozen=True)
class SocialNavScore:
    eff: float
    srt: float
    saf: float
    snc: float
    total: float
    n_episodes: int


def success_rate(outcomes) -> float:
    """Percent of successful episodes; outcomes carry success/steps."""
    if not outcomes:
        raise ValueError("success_rate needs at least one outcome")
    n_success = sum(1 for o in outcomes if _field(o, "success"))
    return 100.0 * n_success / len(outcomes)


def efficiency(outcomes, t_max: float) -> float | None:
    """Mean of (T_max - S_i)/T_max over successful episodes.

    Returns None (absent) when no episode succeeded; the average divides by
    the success count, so zero successes leaves it undefined.
    """
    if not outcomes:
        raise ValueError("efficiency needs at least one outcome")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    scores = [(t_max - _field(o, "steps")) / t_max
              for o in outcomes if _field(o, "success")]
    if not scores:
        return None
    return float(np.mean(scores))


def score_exploration(outcomes, t_max: float) -> ExplorationScore:
    n_success = sum(1 for o in outcomes if _field(o, "success"))
    return ExplorationScore(n_total=len(outcomes), n_success=n_success,
                            sr=success_rate(outcomes),
                            efficiency=efficiency(outcomes, t_max))


def eff(t_actual: float, t_min: float, t_max: float) -> float:
    """1 - (T_actual - T_min)/(T_max - T_min), clamped to [0, 1]."""
    if t_max <= t_min:
        raise ValueError(f"t_max ({t_max}) must exceed t_min ({t_min})")
    value = 1.0 - (t_actual - t_min) / (t_max - t_min)
    return min(1.0, max(0.0, value))


def saf(collisions: int) -> float:
    """1.0 for zero collisions, 0.5 for 1-3, 0.0 for more than 3."""
    if collisions < 0:
        raise ValueError("collisions must be >= 0")
    if collisions == 0:
        return 1.0
    if collisions <= 3:
        return 0.5
    return 0.0


def snc(f1: float, f2: float) -> float:
    """Social-compliance score from intrusion time fractions (higher better).

    Type1 (intimate-space) time counts in full, Type2 (personal-space) at
    half weight; the result is clamped to [0, 1].
    """
    if not (0.0 <= f1 <= 1.0 and 0.0 <= f2 <= 1.0):
        raise ValueError(f"f1/f2 must lie in [0, 1], got {f1}, {f2}")
    value = 1.0 - (TYPE1_INTRUSION_WEIGHT * f1 + TYPE2_INTRUSION_WEIGHT * f2)
    return min(1.0, max(0.0, value))


def total(eff_: float, srt: float, saf_: float, snc_: float) -> float:
    """100 * (0.2*EFF + 0.2*SRT + 0.3*SAF + 0.3*SNC)."""
    for name, v in (("eff", eff_), ("srt", srt), ("saf", saf_),
                    ("snc", snc_)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return 100.0 * (EFF_WEIGHT * eff_ + SRT_WEIGHT * srt
                    + SAF_WEIGHT * saf_ + SNC_WEIGHT * snc_)


def score_socialnav(summaries) -> SocialNavScore:
    """Aggregate a batch of navigation episode summaries.

    Each summary carries success, t_actual, t_min, t_max, collisions, f1, f2.
    Failed episodes contribute 0 to EFF; SRT is the success fraction; SAF and
    SNC are per-episode scores averaged across the batch.
    """
    if not summaries:
        raise ValueError("score_socialnav needs at least one summary")
    effs, safs, sncs, successes = [], [], [], []
    for s in summaries:
        ok = bool(_field(s, "success"))
        successes.append(ok)
        effs.append(eff(_field(s, "t_actual"), _field(s, "t_min"),
                        _field(s, "t_max")) if ok else 0.0)
        safs.append(saf(_field(s, "collisions")))
        sncs.append(snc(_field(s, "f1"), _field(s, "f2")))
    eff_ = float(np.mean(effs))
    srt = float(np.mean(successes))
    saf_ = float(np.mean(safs))
    snc_ = float(np.mean(sncs))
    return SocialNavScore(eff=eff_, srt=srt, saf=saf_, snc=snc_,
                          total=total(eff_, srt, saf_, snc_),
                          n_episodes=len(summaries))
