"""Scoring: task metrics, seating preference scorer, benchmark reports."""

from .scores import (ExplorationScore, SocialNavScore, eff, efficiency, saf,
                     score_exploration, score_socialnav, snc, success_rate,
                     total)
from .seating import (Apart, AttributeIs, NextTo, PgScore, Seat,
                      SeatingProblem, plan_from_dict, problem_from_dict,
                      problem_to_dict, random_problem, score_seating)
from .report import BenchmarkReport, read_report, write_report

__all__ = [
    "ExplorationScore", "SocialNavScore", "eff", "efficiency", "saf",
    "score_exploration", "score_socialnav", "snc", "success_rate", "total",
    "Apart", "AttributeIs", "NextTo", "PgScore", "Seat", "SeatingProblem",
    "plan_from_dict", "problem_from_dict", "problem_to_dict",
    "random_problem", "score_seating",
    "BenchmarkReport", "read_report", "write_report",
]
