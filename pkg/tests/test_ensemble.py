from __future__ import annotations

import random

import pytest

from halluspan.ensemble import VoteStack, aggregate_votes
from halluspan.errors import LengthMismatch, NonBinaryVoter


def test_vote_share_example():
    stack = VoteStack(((1.0, 0.0, 1.0), (1.0, 1.0, 0.0), (0.0, 0.0, 0.0)))
    shares = aggregate_votes(stack)
    assert shares.probs == pytest.approx((2 / 3, 1 / 3, 1 / 3))


def test_single_voter_is_identity():
    stack = VoteStack(((1.0, 0.0, 1.0),))
    assert aggregate_votes(stack).probs == (1.0, 0.0, 1.0)


def test_unanimous_votes_stay_binary():
    stack = VoteStack(((1.0, 0.0), (1.0, 0.0), (1.0, 0.0)))
    assert aggregate_votes(stack).probs == (1.0, 0.0)


def test_vote_share_is_permutation_invariant():
    rng = random.Random(7)
    for _ in range(50):
        n_voters = rng.randint(2, 6)
        length = rng.randint(1, 30)
        voters = [
            tuple(float(rng.randint(0, 1)) for _ in range(length))
            for _ in range(n_voters)
        ]
        baseline = aggregate_votes(VoteStack(tuple(voters)))
        rng.shuffle(voters)
        assert aggregate_votes(VoteStack(tuple(voters))) == baseline


def test_vote_stack_rejects_mismatched_lengths():
    with pytest.raises(LengthMismatch):
        VoteStack(((1.0, 0.0), (1.0,)))


def test_vote_stack_rejects_non_binary_votes():
    with pytest.raises(NonBinaryVoter):
        VoteStack(((0.5, 0.0),))


def test_vote_stack_rejects_empty():
    with pytest.raises(ValueError):
        VoteStack(())


def test_empty_text_votes():
    stack = VoteStack(((), ()))
    assert aggregate_votes(stack).probs == ()
