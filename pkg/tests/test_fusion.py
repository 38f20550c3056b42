"""Unit aggregation and the voting rules, exhaustively."""

import itertools

import numpy as np
import pytest

from ddp.classifiers import Prediction
from ddp.dataset_registry import Label
from ddp.errors import ContractError, DataError
from ddp.fusion import (FusionMode, Modality, ModalityVerdict, aggregate_units, vote)


def verdict(modality, score, vid="v0", n_units=1):
    if score is None:
        return ModalityVerdict(modality=modality, video_id=vid, score=None, n_units=0)
    return ModalityVerdict(modality=modality, video_id=vid, score=score,
                           n_units=n_units)


def triple(visual=None, acoustic=None, lexical=None, vid="v0"):
    return [verdict(Modality.VISUAL, visual, vid),
            verdict(Modality.ACOUSTIC, acoustic, vid),
            verdict(Modality.LEXICAL, lexical, vid)]


class TestAggregateUnits:
    def test_mean_hits_inclusive_threshold(self):
        preds = [Prediction(unit_id=f"v0@{i}", score=s)
                 for i, s in enumerate([0.2, 0.4, 0.9])]
        v = aggregate_units(preds, Modality.ACOUSTIC, "v0")
        np.testing.assert_allclose(v.score, 0.5)
        assert v.label is Label.DECEPTIVE and v.n_units == 3

    def test_high_scores(self):
        preds = [Prediction(unit_id="v0@a", score=0.9),
                 Prediction(unit_id="v0@b", score=0.9)]
        v = aggregate_units(preds, Modality.VISUAL, "v0")
        np.testing.assert_allclose(v.score, 0.9)
        assert v.label is Label.DECEPTIVE

    def test_empty_is_abstain(self):
        v = aggregate_units([], Modality.LEXICAL, "v0")
        assert v.abstained and v.score is None and v.label is None and v.n_units == 0

    def test_mixed_video_ids_rejected(self):
        preds = [Prediction(unit_id="other@0", score=0.5)]
        with pytest.raises(ContractError):
            aggregate_units(preds, Modality.VISUAL, "v0")

    def test_prefix_confusion_rejected(self):
        # "v1" units must not slip into "v1x" aggregation, nor vice versa
        with pytest.raises(ContractError):
            aggregate_units([Prediction(unit_id="v1@0.0", score=0.5)],
                            Modality.VISUAL, "v1x")
        with pytest.raises(ContractError):
            aggregate_units([Prediction(unit_id="v1x@0.0", score=0.5)],
                            Modality.VISUAL, "v1")


class TestHardMajority:
    def test_exhaustive_three_voter_truth_table(self):
        for labels in itertools.product([Label.DECEPTIVE, Label.TRUTHFUL], repeat=3):
            scores = [0.8 if l is Label.DECEPTIVE else 0.2 for l in labels]
            fused = vote(triple(*scores), FusionMode.HARD_MAJORITY)
            expected = (Label.DECEPTIVE
                        if sum(l is Label.DECEPTIVE for l in labels) >= 2
                        else Label.TRUTHFUL)
            assert fused.label is expected, labels

    def test_three_voters_never_need_tiebreak(self):
        # with three live voters the counts are always 3-0 or 2-1
        for labels in itertools.product([Label.DECEPTIVE, Label.TRUTHFUL], repeat=3):
            deceptive = sum(l is Label.DECEPTIVE for l in labels)
            assert deceptive != 3 - deceptive

    def test_all_abstention_patterns(self):
        # the 12 one-abstainer patterns (3 masks x 4 label pairs), plus the
        # 6 two-abstainer patterns where the lone voter decides
        one_abstainer = two_abstainers = 0
        for abstain_mask in itertools.product([True, False], repeat=3):
            n_abstain = sum(abstain_mask)
            if n_abstain not in (1, 2):
                continue
            for labels in itertools.product([Label.DECEPTIVE, Label.TRUTHFUL],
                                            repeat=3 - n_abstain):
                scores = iter([0.9 if l is Label.DECEPTIVE else 0.3 for l in labels])
                args = [None if masked else next(scores) for masked in abstain_mask]
                fused = vote(triple(*args), FusionMode.HARD_MAJORITY)
                if n_abstain == 2:
                    (only,) = labels
                    assert fused.label is only
                    two_abstainers += 1
                else:
                    a, b = labels
                    if a is b:
                        assert fused.label is a
                    else:
                        # disagreeing pair: 0.9 is farther from 0.5 than 0.3
                        assert fused.label is Label.DECEPTIVE
                    one_abstainer += 1
        assert one_abstainer == 12 and two_abstainers == 6

    def test_two_voter_confidence_rule(self):
        # truthful @0.1 (confidence .4) beats deceptive @0.6 (confidence .1)
        fused = vote(triple(visual=0.1, acoustic=None, lexical=0.6),
                     FusionMode.HARD_MAJORITY)
        assert fused.label is Label.TRUTHFUL

    def test_two_voter_exact_confidence_tie_goes_deceptive(self):
        # 0.25 and 0.75 are exactly representable, so the confidences tie
        fused = vote(triple(visual=0.25, acoustic=0.75, lexical=None),
                     FusionMode.HARD_MAJORITY)
        assert fused.label is Label.DECEPTIVE

    def test_all_abstain_is_no_evidence(self):
        with pytest.raises(DataError, match="no evidence"):
            vote(triple(None, None, None), FusionMode.HARD_MAJORITY)


class TestSoftMean:
    def test_mean_rule_agrees_with_example(self):
        fused = vote(triple(0.9, 0.9, 0.0), FusionMode.SOFT_MEAN)
        assert fused.label is Label.DECEPTIVE  # mean 0.6
        hard = vote(triple(0.9, 0.9, 0.0), FusionMode.HARD_MAJORITY)
        assert hard.label is Label.DECEPTIVE

    def test_abstainers_excluded_from_mean(self):
        fused = vote(triple(0.2, None, 0.4), FusionMode.SOFT_MEAN)
        assert fused.label is Label.TRUTHFUL  # mean 0.3

    def test_monotone_in_any_score(self):
        rng = np.random.default_rng(71)
        for _ in range(300):
            scores = rng.uniform(0, 1, size=3)
            fused = vote(triple(*scores), FusionMode.SOFT_MEAN)
            if fused.label is Label.DECEPTIVE:
                bumped = scores.copy()
                i = rng.integers(0, 3)
                bumped[i] = min(1.0, bumped[i] + rng.uniform(0, 1.0))
                assert vote(triple(*bumped), FusionMode.SOFT_MEAN).label is Label.DECEPTIVE


class TestVoteContracts:
    def test_permutation_invariance_fuzz(self):
        rng = np.random.default_rng(72)
        for _ in range(1000):
            scores = [None if rng.random() < 0.2 else float(rng.random())
                      for _ in range(3)]
            if all(s is None for s in scores):
                continue
            mode = FusionMode.HARD_MAJORITY if rng.random() < 0.5 else FusionMode.SOFT_MEAN
            verdicts = triple(*scores)
            baseline = vote(verdicts, mode).label
            for perm in itertools.permutations(verdicts):
                assert vote(list(perm), mode).label is baseline

    def test_needs_exactly_one_verdict_per_modality(self):
        v = triple(0.5, 0.5, 0.5)
        with pytest.raises(ContractError):
            vote(v[:2], FusionMode.HARD_MAJORITY)
        with pytest.raises(ContractError):
            vote([v[0], v[0], v[2]], FusionMode.HARD_MAJORITY)

    def test_mixed_videos_rejected(self):
        mixed = triple(0.5, 0.5, 0.5)
        mixed[2] = verdict(Modality.LEXICAL, 0.5, vid="other")
        with pytest.raises(ContractError):
            vote(mixed, FusionMode.HARD_MAJORITY)

    def test_verdict_invariants(self):
        with pytest.raises(ContractError):
            ModalityVerdict(modality=Modality.VISUAL, video_id="v", score=None, n_units=2)
        with pytest.raises(ContractError):
            ModalityVerdict(modality=Modality.VISUAL, video_id="v", score=0.5, n_units=0)
