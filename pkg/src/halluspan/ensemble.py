"""Combine several detection runs by per-character vote share.

Voters are binary per-character vectors over the same text. The combined
soft probability of a character is simply the fraction of voters that
flagged it; order of voters cannot matter. Hard spans are recovered from
the shares with the usual threshold rule.
"""

from __future__ import annotations

from dataclasses import dataclass

from .datamodel import SoftLabelVector
from .errors import LengthMismatch, NonBinaryVoter


@dataclass(frozen=True)
class VoteStack:
    """Aligned binary voters for one datapoint."""

    voters: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not self.voters:
            raise ValueError("a vote stack needs at least one voter")
        length = len(self.voters[0])
        for i, voter in enumerate(self.voters):
            if len(voter) != length:
                raise LengthMismatch(
                    f"voter {i} has length {len(voter)}, expected {length}"
                )
            for p in voter:
                if p not in (0.0, 1.0):
                    raise NonBinaryVoter(
                        f"voter {i} holds non-binary probability {p}"
                    )

    @property
    def length(self) -> int:
        return len(self.voters[0])


def aggregate_votes(stack: VoteStack) -> SoftLabelVector:
    """Per-character fraction of voters that flagged the character."""
    n = len(stack.voters)
    return SoftLabelVector(
        tuple(sum(voter[i] for voter in stack.voters) / n for i in range(stack.length))
    )
