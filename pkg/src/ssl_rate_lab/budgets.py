"""Unlabeled sample budgets u(ell)."""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_EXP_CAP = 10**8


@dataclass(frozen=True)
class UnlabeledBudget:
    kind: str = "zero"
    k: float = 1.0
    cap: int = DEFAULT_EXP_CAP

    def __post_init__(self):
        if self.kind not in ("zero", "linear", "square", "quartic", "exponential"):
            raise ValueError(f"unknown budget kind {self.kind!r}")
        if self.kind == "linear" and self.k < 0:
            raise ValueError("linear budget needs k >= 0")
        if self.kind == "exponential" and self.cap < 1:
            raise ValueError("exponential budget needs a positive cap")

    def __call__(self, ell: int) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "linear":
            return int(math.floor(self.k * ell))
        if self.kind == "square":
            return ell * ell
        if self.kind == "quartic":
            return ell**4
        if ell > math.log(self.cap):
            return self.cap
        return min(self.cap, int(math.floor(math.exp(ell))))

    def capped(self, ell: int) -> bool:
        return self.kind == "exponential" and ell > math.log(self.cap)

    @property
    def label(self) -> str:
        if self.kind == "linear":
            return f"linear:{self.k:g}"
        if self.kind == "exponential":
            return f"exp:{self.cap}"
        return self.kind


def parse_budget(text: str) -> UnlabeledBudget:
    """Parse ``zero``, ``linear:k``, ``square``, ``quartic`` or ``exp:cap``."""
    head, _, arg = text.strip().lower().partition(":")
    try:
        if head in ("zero", "square", "quartic") and not arg:
            return UnlabeledBudget(head)
        if head == "linear":
            return UnlabeledBudget("linear", k=float(arg) if arg else 1.0)
        if head in ("exp", "exponential"):
            return UnlabeledBudget("exponential", cap=int(float(arg)) if arg else DEFAULT_EXP_CAP)
    except ValueError as exc:
        raise ValueError(f"bad budget {text!r}: {exc}") from exc
    raise ValueError(f"unknown budget {text!r}")
