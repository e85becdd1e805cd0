import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genkit.arlm import (
    ArInput,
    ar_nll,
    ar_sample,
    debatts_assemble,
    duration_reduce,
    vevo_assemble,
)
from genkit.losses import grad_check
from genkit.predictors import MlpCategoricalPredictor, TablePredictor
from genkit.tokens import SpecialIds, TokenSequence

token_lists = st.lists(st.integers(min_value=0, max_value=4), max_size=30)


def seq(ids, vocab=5):
    return TokenSequence(tuple(ids), vocab)


class TestArNll:
    def test_uniform_predictor(self):
        vocab = 5
        s = seq([0, 3, 1, 4])
        pred = TablePredictor(np.full((4, vocab), 1 / vocab))
        mask = np.array([True, False, True, True])
        assert ar_nll(pred, s, mask) == pytest.approx(3 * math.log(vocab), rel=1e-12)

    def test_all_false_mask(self):
        s = seq([1, 2])
        pred = TablePredictor(np.full((2, 5), 0.2))
        assert ar_nll(pred, s, np.zeros(2, dtype=bool)) == 0.0

    def test_delta_predictor(self):
        s = seq([2, 0], vocab=3)
        pred = TablePredictor([[0, 0, 1.0], [1.0, 0, 0]], num_classes=3)
        assert ar_nll(pred, s, np.ones(2, dtype=bool)) == 0.0

    def test_zero_probability_sentinel(self):
        s = seq([1], vocab=2)
        pred = TablePredictor([[1.0, 0.0]])
        assert ar_nll(pred, s, np.array([True])) == math.inf

    def test_matches_direct_sum_for_context_free_predictor(self):
        rng = np.random.default_rng(0)
        rows = rng.dirichlet(np.ones(5), size=6)
        s = seq(rng.integers(0, 5, size=6))
        pred = TablePredictor(rows)
        direct = -sum(math.log(rows[i, s.ids[i]]) for i in range(6))
        assert ar_nll(pred, s, np.ones(6, dtype=bool)) == pytest.approx(direct, rel=1e-12)

    def test_mask_length_checked(self):
        s = seq([1, 2])
        pred = TablePredictor(np.full((2, 5), 0.2))
        with pytest.raises(ValueError):
            ar_nll(pred, s, np.ones(3, dtype=bool))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        n, vocab = 5, 4
        s = TokenSequence(tuple(rng.integers(0, vocab, size=n)), vocab)
        mask = rng.random(n) < 0.7
        mask[1] = True
        pred = MlpCategoricalPredictor(n, vocab, hidden_dim=5, seed=3)

        def f(theta):
            pred.set_params(theta)
            value = ar_nll(pred, s, mask)
            from genkit.tokens import unmasked
            grad = pred.masked_nll_grad(unmasked(s), None, s.ids, mask)
            return value, grad

        assert grad_check(f, pred.get_params(), h=1e-5) < 1e-4


class TestArSample:
    def test_immediate_eos(self):
        eos = 6
        pred = TablePredictor([[0, 0, 0, 0, 0, 0, 1.0]], num_classes=7)
        prefix = seq([1, 2])
        out = ar_sample(pred, prefix, max_len=5, eos=eos)
        assert out.ids == (1, 2, eos)
        assert prefix.ids == (1, 2)

    def test_cycling_table(self):
        eos = 6
        # the probe sequence grows by one masked slot each call, so the row
        # picked for the new position cycles 2 -> 3 -> eos by position index
        rows = np.zeros((3, 7))
        rows[0, 2] = 1.0   # position 0 (first generated, probe length 1)
        rows[1, 3] = 1.0
        rows[2, eos] = 1.0
        pred = TablePredictor(rows, num_classes=7)
        out = ar_sample(pred, seq([], vocab=5), max_len=10, eos=eos)
        assert out.ids == (2, 3, eos)

    def test_max_len_zero_rejected(self):
        pred = TablePredictor(np.full((1, 5), 0.2))
        with pytest.raises(ValueError):
            ar_sample(pred, seq([0]), max_len=0, eos=4)

    def test_max_len_reached_without_eos(self):
        pred = TablePredictor([[1.0, 0, 0, 0, 0]])
        out = ar_sample(pred, seq([3]), max_len=4, eos=2)
        assert out.ids == (3, 0, 0, 0, 0)

    def test_seeded_sampling_reproducible(self):
        rng = np.random.default_rng(1)
        rows = rng.dirichlet(np.ones(5), size=8)
        pred = TablePredictor(rows)
        a = ar_sample(pred, seq([1]), max_len=6, eos=4, mode="sample", seed=42)
        b = ar_sample(pred, seq([1]), max_len=6, eos=4, mode="sample", seed=42)
        assert a.ids == b.ids

    def test_sample_without_seed_rejected(self):
        pred = TablePredictor(np.full((1, 5), 0.2))
        with pytest.raises(ValueError):
            ar_sample(pred, seq([0]), max_len=2, eos=1, mode="sample")


class TestVevoAssemble:
    def test_layout_and_loss_region(self):
        content, g, style = seq([5], 10), seq([7], 10), seq([9], 10)
        asm = vevo_assemble(content, g, style)
        sp = asm.specials
        assert asm.tokens.ids == (sp.sos, 5, sp.sep, 7, sp.sep, 9)
        assert asm.eval_tokens.ids == (sp.sos, 5, sp.sep, 7, sp.sep, 9, sp.eos)
        # loss positions are the style ids plus the final eos; their targets
        # are exactly [style, eos]
        np.testing.assert_array_equal(asm.loss_mask,
                                      [False, False, False, False, False, True, True])
        assert asm.targets == (9, sp.eos)

    def test_empty_g(self):
        asm = vevo_assemble(seq([1, 2], 10), seq([], 10), seq([3], 10))
        sp = asm.specials
        assert asm.tokens.ids == (sp.sos, 1, 2, sp.sep, sp.sep, 3)

    def test_all_empty(self):
        asm = vevo_assemble(seq([], 10), seq([], 10), seq([], 10))
        sp = asm.specials
        assert asm.tokens.ids == (sp.sos, sp.sep, sp.sep)
        assert asm.targets == (sp.eos,)

    @given(token_lists, token_lists, token_lists)
    @settings(max_examples=100, deadline=None)
    def test_length_identity(self, c, g, s):
        asm = vevo_assemble(seq(c), seq(g), seq(s))
        assert len(asm.tokens) == len(c) + len(g) + len(s) + 3

    def test_vocab_mismatch_rejected(self):
        with pytest.raises(ValueError):
            vevo_assemble(seq([1], 10), seq([1], 11), seq([1], 10))

    def test_nll_over_loss_region(self):
        # uniform predictor over the extended vocabulary: the loss region has
        # len(style)+1 scored positions
        content, g, style = seq([0], 4), seq([1], 4), seq([2, 3], 4)
        asm = vevo_assemble(content, g, style)
        width = 4 + 4  # payload + mask + sos/sep/eos
        pred = TablePredictor(np.full((len(asm.eval_tokens), width), 1 / width),
                              num_classes=width)
        nll = ar_nll(pred, asm.eval_tokens, asm.loss_mask)
        assert nll == pytest.approx(3 * math.log(width), rel=1e-12)


class TestDurationReduce:
    def test_run_collapse(self):
        assert duration_reduce(seq([1, 1, 2, 2, 2, 3])).ids == (1, 2, 3)

    def test_empty(self):
        assert duration_reduce(seq([])).ids == ()

    def test_single_run(self):
        assert duration_reduce(seq([4, 4, 4, 4])).ids == (4,)

    @given(token_lists)
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, ids):
        once = duration_reduce(seq(ids))
        twice = duration_reduce(once)
        assert once.ids == twice.ids

    @given(token_lists)
    @settings(max_examples=100, deadline=None)
    def test_no_adjacent_duplicates(self, ids):
        out = duration_reduce(seq(ids)).ids
        assert all(a != b for a, b in zip(out, out[1:]))


class TestDebattsAssemble:
    def test_singleton_inputs(self):
        inp = debatts_assemble(seq([1]), seq([2]), seq([3]))
        assert inp.prefix.ids == (1, 2, 3)
        assert inp.target_start == 3
        np.testing.assert_array_equal(inp.loss_mask(5), [False] * 3 + [True] * 2)

    def test_empty_opponent_reduces_to_prompt_tts(self):
        inp = debatts_assemble(seq([], 10), seq([7, 8], 10), seq([9], 10))
        assert inp.prefix.ids == (7, 8, 9)
        assert inp.target_start == 3

    def test_conditional_nll_changes_with_opponent_context(self):
        # context-keyed predictor: the opponent prefix shifts every row, but
        # the scored positions stay the loss region
        vocab = 4
        target = [2, 1]

        def rows_for(bias):
            rows = np.full((4, vocab), (1 - bias) / (vocab - 1))
            rows[:, 2] = bias
            return rows

        pred = TablePredictor(rows_for(0.4), contexts={"": rows_for(0.4)})
        inp_a = debatts_assemble(seq([0]), seq([1]), seq([]))
        inp_b = debatts_assemble(seq([3]), seq([1]), seq([]))
        full_a = inp_a.prefix.concat(seq(target))
        full_b = inp_b.prefix.concat(seq(target))
        mask_a = inp_a.loss_mask(len(full_a))
        mask_b = inp_b.loss_mask(len(full_b))
        np.testing.assert_array_equal(mask_a, mask_b)

        ctx_pred = TablePredictor(
            rows_for(0.4),
            contexts={},
        )
        # same predictor, same loss positions: equal NLL
        assert ar_nll(ctx_pred, full_a, mask_a) == pytest.approx(
            ar_nll(ctx_pred, full_b, mask_b))

        # a predictor that actually reads its context produces different NLL
        class ContextReader:
            num_classes = vocab

            def predict(self, state, condition=None):
                first = int(state.base.ids[0])
                bias = 0.7 if first == 0 else 0.2
                rows = np.full((len(state), vocab), (1 - bias) / (vocab - 1))
                rows[:, 2] = bias
                return rows

        nll_a = ar_nll(ContextReader(), full_a, mask_a)
        nll_b = ar_nll(ContextReader(), full_b, mask_b)
        assert nll_a != nll_b

    def test_target_region_consistency(self):
        with pytest.raises(ValueError):
            ArInput(prefix=seq([1, 2]), target_start=1,
                    specials=SpecialIds.for_vocab(5))
