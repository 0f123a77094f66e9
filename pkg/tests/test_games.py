import random
from fractions import Fraction

import pytest

import oracles
from refgame.agents import make_challenger, make_prover
from refgame.core import (CHALLENGER, CHALLENGER_WINS, CONTINUE, INVALID_CHALLENGE, PROVER,
                          PROVER_WINS, RANGE, Move, Transcript, transcript_append)
from refgame.encoding import decode_all, encode
from refgame.games import GAMES, GameConfigError, get_game
from refgame.games import gcd as G
from refgame.games import intersect as I
from refgame.games import matmul as M
from refgame.games import opt as O
from refgame.games import sorting as S
from refgame.games import tm as T
from refgame.referee import verify_step

from util import Scripted, honest_pair, play


def step(kind, inst, *payloads):
    """Transcript carrying ``payloads`` plus the verdict of the last one."""
    g = get_game(kind)
    spec = g.spec(inst)
    t = Transcript(spec, "s")
    v = None
    for rnd, p in enumerate(payloads, 1):
        t = transcript_append(t, Move(CHALLENGER if rnd % 2 else PROVER, rnd, p))
        v = verify_step(g, spec, inst, t, rnd)
        t = t.with_step(v)
    return t, v


def test_registry():
    assert set(GAMES) == {"matmul", "intersect", "sorting", "gcd", "tm", "opt"}
    with pytest.raises(GameConfigError):
        get_game("chess")


# --- matmul ---------------------------------------------------------------------

I2 = ((1, 0), (0, 1))


class TestMatmul:
    def test_self_refuting_challenge(self):
        inst = M.MatmulInstance(2, 2, I2, I2, I2)
        _, v = step("matmul", inst, encode(M.CHALLENGE, [1, 1], [0, 1, 1]))
        assert (v.outcome, v.reason) == (PROVER_WINS, INVALID_CHALLENGE)

    def test_wrong_entry_cannot_be_defended(self):
        inst = M.MatmulInstance(2, 2, I2, I2, ((0, 0), (0, 1)))
        t, v = step("matmul", inst, encode(M.CHALLENGE, [1, 1], [0, 1, 1]))
        assert v.outcome == CONTINUE
        assert get_game("matmul").honest_move(inst, t) is None
        assert play("matmul", inst, *honest_pair("matmul")).winner == CHALLENGER

    def test_nonzero_d0(self):
        inst = M.MatmulInstance(2, 2, I2, I2, ((0, 0), (0, 1)))
        _, v = step("matmul", inst, encode(M.CHALLENGE, [1, 1], [1, 1, 1]))
        assert (v.outcome, v.reason) == (PROVER_WINS, INVALID_CHALLENGE)

    def test_honest_challenger_abstains_on_correct(self):
        inst = get_game("matmul").generate(3, random.Random(1))
        assert get_game("matmul").honest_move(inst, Transcript(get_game("matmul").spec(inst), "s")) is None

    def test_row_major_least_wrong_entry(self):
        A = ((1, 2), (3, 4))
        C = [list(r) for r in oracles.matmul(A, A, 97)]
        C[0][1] += 1
        C[1][0] += 1
        inst = M.MatmulInstance(97, 2, A, A, tuple(map(tuple, C)))
        g = get_game("matmul")
        _, (ij, d) = decode_all(g.honest_move(inst, Transcript(g.spec(inst), "s")), 2)
        assert ij == [1, 2]
        assert d == [0, 1 * 2 % 97, (1 * 2 + 2 * 4) % 97]

    def test_prover_points_at_first_broken_partial(self):
        A = ((1, 2), (3, 4))
        inst = M.MatmulInstance(97, 2, A, A, oracles.matmul(A, A, 97))
        t, v = step("matmul", inst, encode(M.CHALLENGE, [1, 1], [0, 5, 9]))
        assert v.outcome == CONTINUE
        assert decode_all(get_game("matmul").honest_move(inst, t), 1)[1] == [[1]]

    def test_out_of_range_coordinates(self):
        inst = M.MatmulInstance(2, 2, I2, I2, I2)
        _, v = step("matmul", inst, encode(M.CHALLENGE, [3, 1], [0, 1, 0]))
        assert v.outcome == PROVER_WINS

    def test_solve_matches_oracle(self):
        g = get_game("matmul")
        for seed in range(5):
            inst = g.generate(4, random.Random(seed))
            assert inst.claimed_C == oracles.matmul(inst.A, inst.B, 97)


# --- intersection -------------------------------------------------------------------

class TestIntersect:
    def test_correct(self):
        inst = I.IntersectInstance(2, (1, 2), (2, 3), (2,))
        assert play("intersect", inst, *honest_pair("intersect")).winner == PROVER

    def test_alien_element(self):
        inst = I.IntersectInstance(2, (1, 2), (2, 3), (2, 3))
        g = get_game("intersect")
        assert g.honest_move(inst, Transcript(g.spec(inst), "s")) == encode(I.CASE_II, [2])
        assert play("intersect", inst, *honest_pair("intersect")).winner == CHALLENGER

    def test_missing_element(self):
        inst = I.IntersectInstance(2, (1, 2), (2, 3), ())
        t, v = step("intersect", inst, encode(I.CASE_I, [2, 1]))
        assert v.outcome == CONTINUE
        assert get_game("intersect").honest_move(inst, t) is None
        assert play("intersect", inst, *honest_pair("intersect")).winner == CHALLENGER

    def test_case_i_preferred(self):
        inst = I.IntersectInstance(3, (1, 2), (2, 3), (5,))
        g = get_game("intersect")
        assert g.honest_move(inst, Transcript(g.spec(inst), "s")) == encode(I.CASE_I, [2, 1])

    def test_case_ii_defense(self):
        inst = I.IntersectInstance(2, (1, 2), (2, 3), (2,))
        t, v = step("intersect", inst, encode(I.CASE_II, [1]))
        assert v.outcome == CONTINUE
        mv = get_game("intersect").honest_move(inst, t)
        assert mv == encode(I.DEF_II, [2, 1])
        _, v2 = step("intersect", inst, encode(I.CASE_II, [1]), mv)
        assert v2.outcome == PROVER_WINS

    def test_solve_matches_oracle(self):
        g = get_game("intersect")
        for seed in range(5):
            inst = g.generate(8, random.Random(seed))
            assert list(inst.claimed_C) == oracles.intersection(inst.A, inst.B)


# --- sorting ------------------------------------------------------------------

class TestSorting:
    def test_correct(self):
        inst = S.SortInstance(2, (3, 1, 2), (2, 3, 1))
        assert play("sorting", inst, *honest_pair("sorting")).winner == PROVER

    def test_descending_claim(self):
        inst = S.SortInstance(2, (3, 1, 2), (1, 3, 2))
        g = get_game("sorting")
        mv = g.honest_move(inst, Transcript(g.spec(inst), "s"))
        assert mv == encode(S.CASE_III, [1, 2])
        t, v = step("sorting", inst, mv)
        assert v.outcome == CONTINUE and g.honest_move(inst, t) is None
        assert play("sorting", inst, *honest_pair("sorting")).winner == CHALLENGER

    def test_duplicate_index(self):
        inst = S.SortInstance(2, (3, 1, 2), (1, 1, 2))
        _, v = step("sorting", inst, encode(S.CASE_II, [1, 2]))
        assert v.outcome == CHALLENGER_WINS

    def test_range_violation_case_i(self):
        inst = S.SortInstance(2, (3, 1, 2), (1, 0, 2))
        g = get_game("sorting")
        assert g.honest_move(inst, Transcript(g.spec(inst), "s")) == encode(S.CASE_I, [2])

    def test_inflated_bit_refuted(self):
        inst = S.SortInstance(2, (2, 1), (2, 1))
        t, v = step("sorting", inst, encode(S.CASE_III, [1, 2]))
        assert v.outcome == CONTINUE
        mv = get_game("sorting").honest_move(inst, t)
        assert mv == encode(S.DEFENSE, [1])
        assert step("sorting", inst, encode(S.CASE_III, [1, 2]), mv)[1].outcome == PROVER_WINS

    def test_range_through_case_iii(self):
        inst = S.SortInstance(2, (3, 1, 2), (1, 5, 2))
        _, v = step("sorting", inst, encode(S.CASE_III, [1, 1]))
        assert (v.outcome, v.reason) == (CHALLENGER_WINS, RANGE)

    def test_bits_msb_first(self):
        assert S.bit(2, 1, 2) == 1 and S.bit(2, 2, 2) == 0
        assert S.first_difference(3, 2, 2) == 2

    def test_solve_matches_oracle(self):
        g = get_game("sorting")
        for seed in range(5):
            inst = g.generate(10, random.Random(seed))
            assert list(inst.claimed_f) == oracles.sort_indices(inst.A)


# --- gcd ----------------------------------------------------------------------

def gcd_inst(a, b, claim=None):
    task = G.GcdInstance(a, b, (0, 0, 0, 0, 0))
    return get_game("gcd").solve(task) if claim is None else G.GcdInstance(a, b, claim)


class TestGcd:
    def test_bezout_fixture(self):
        assert gcd_inst(12, 8).claimed == (4, 1, -1, 3, 2)
        assert oracles.bezout(12, 8) == (4, 1, -1, 3, 2)

    def test_correct_tuple_stands(self):
        inst = gcd_inst(12, 8)
        assert play("gcd", inst, *honest_pair("gcd")).winner == PROVER

    def test_wrong_gcd(self):
        inst = gcd_inst(12, 8, (3, 1, -1, 4, 3))
        g = get_game("gcd")
        tag, ((p,), res) = decode_all(g.honest_move(inst, Transcript(g.spec(inst), "s")), 2)
        a, b, c, d, e, dp, ep = inst.values
        expect = next(q for q in range(2, 1000) if all(q % r for r in range(2, q)) and
                      ((c - d * a - e * b) % q or (a - dp * c) % q or (b - ep * c) % q))
        assert p == expect
        assert play("gcd", inst, *honest_pair("gcd")).winner == CHALLENGER

    def test_lie_about_c_is_answered_with_c(self):
        inst = gcd_inst(12, 8)
        res = [v % 5 for v in inst.values]
        res[2] = 1
        t, v = step("gcd", inst, encode(G.CHALLENGE, [5], res))
        assert v.outcome == CONTINUE
        _, ((kc, sign), bits, partial) = decode_all(get_game("gcd").honest_move(inst, t), 3)
        assert kc == 2 and sign == 0 and partial[-1] == 4 % 5

    def test_recurrence_break_found(self):
        inst = gcd_inst(12, 8)
        res = [v % 5 for v in inst.values]
        res[2] = 1
        L = G.bit_length_bound(inst.n)
        sign, bits, partial = G.expansion(4, L, 5)
        partial[3] = (partial[3] + 1) % 5
        partial[-1] = 2  # still disagrees with the challenger's residue 1
        t, v = step("gcd", inst, encode(G.CHALLENGE, [5], res), encode(G.DEFENSE, [2, sign], bits, partial))
        assert v.outcome == CONTINUE
        assert get_game("gcd").honest_move(inst, t) == encode(G.COMPLAINT, [G.RECURRENCE, 3])
        assert step("gcd", inst, *[m.payload for m in t.moves], encode(G.COMPLAINT, [G.RECURRENCE, 3]))[1].outcome == CHALLENGER_WINS

    def test_consistent_pinpoint_loses(self):
        inst = gcd_inst(12, 8)
        res = [v % 5 for v in inst.values]
        res[2] = 1
        L = G.bit_length_bound(inst.n)
        sign, bits, partial = G.expansion(4, L, 5)
        moves = (encode(G.CHALLENGE, [5], res), encode(G.DEFENSE, [2, sign], bits, partial),
                 encode(G.COMPLAINT, [G.RECURRENCE, 3]))
        assert step("gcd", inst, *moves)[1].outcome == PROVER_WINS

    def test_negative_values_defended(self):
        inst = gcd_inst(12, 8)
        res = [v % 7 for v in inst.values]
        res[4] = (res[4] + 1) % 7
        t, v = step("gcd", inst, encode(G.CHALLENGE, [7], res))
        assert v.outcome == CONTINUE
        mv = get_game("gcd").honest_move(inst, t)
        assert decode_all(mv, 3)[1][0] == [4, 1]
        assert step("gcd", inst, encode(G.CHALLENGE, [7], res), mv)[1].outcome == CONTINUE

    def test_remainder_convention(self):
        assert -1 % 5 == 4  # the referee's residues are always in 0..p-1
        sign, bits, partial = G.expansion(-1, 4, 5)
        assert sign == 1 and (-partial[-1]) % 5 == 4

    def test_digit_bound(self):
        assert G.digit_bound(2) == 3 and G.digit_bound(6) == 4

    def test_solve_matches_oracle(self):
        g = get_game("gcd")
        for seed in range(5):
            inst = g.generate(4, random.Random(seed))
            assert oracles.bezout_ok(*inst.values)


# --- Turing machines ------------------------------------------------------------

def doubler(inp, T=None, S=None):
    return get_game("tm").generate(len(inp), random.Random(0), time_bound=T, space_bound=S)


class RunChallenger:
    """Challenger that consistently defends a given (possibly fabricated) run."""

    def __init__(self, run, ptr=0):
        self.run, self.ptr = run, ptr

    def move(self, inst, t):
        g = get_game("tm")
        lo, hi, _, _ = g._state(inst, t)
        return g.ladder_for(inst, self.run, lo, hi, self.ptr if not t.moves else 0)


class TestTm:
    def test_doubler_output(self):
        inst = doubler("11")
        m = inst.machine
        assert m.text(inst.claimed_output).rstrip("_") == "1111"
        rules = {(q, m.alphabet[s]): (nq, m.alphabet[w], mv) for q, s, nq, w, mv in m.rules}
        assert oracles.run_tm(rules, m.alphabet, "11", inst.time_bound, inst.space_bound).rstrip("_") == "1111"

    def test_halting_times(self):
        m = T.unary_doubler()
        for n, halt in ((1, 7), (2, 17)):
            inst = doubler("1" * n, T=halt + 5)
            trace = T.true_trace(inst)
            assert trace[halt] == trace[halt + 1] and trace[halt - 1] != trace[halt]

    def test_fabricated_run_loses(self):
        g = get_game("tm")
        task = T.TmInstance(T.write_one_and_halt(), (0,), 8, 2, (0, 0))
        inst = g.solve(task)
        for run in list(g.fabricated_runs(inst, inst.initial(), 0, inst.time_bound))[:12]:
            out = run[inst.time_bound][2:]
            diff = [x for x in range(inst.space_bound) if out[x] != inst.claimed_output[x]]
            if not diff:
                continue
            t = play("tm", inst, make_prover("honest", "tm", 0), RunChallenger(run, diff[0]))
            assert t.winner == PROVER
            assert t.reason != "timeout"

    def test_wrong_output_loses(self):
        inst = doubler("11")
        bad = get_game("tm").corrupt(inst, "corrupt_output_cell", random.Random(3))
        t = play("tm", bad, *honest_pair("tm"))
        assert t.winner == CHALLENGER

    def test_input_misencoded(self):
        g = get_game("tm")
        inst = doubler("111")
        trace = list(T.true_trace(inst))
        first = list(trace[0])
        first[2 + 2] = 3
        trace[0] = tuple(first)
        t, v = step("tm", inst, g.ladder_for(inst, trace, 0, inst.time_bound, 0))
        assert v.outcome == CONTINUE
        mv = g.honest_move(inst, t)
        assert decode_all(mv, 1)[1][0] == [T.FIRST, 4, 0]
        assert step("tm", inst, t.moves[0].payload, mv)[1].outcome == PROVER_WINS

    def test_corrupted_segment(self):
        g = get_game("tm")
        inst = doubler("11")
        times = T.schedule(0, inst.time_bound, inst.spread)
        run = {x: c for x, c in enumerate(T.true_trace(inst))}
        bent = list(run[times[2]])
        bent[2] = (bent[2] + 1) % 4
        run[times[2]] = tuple(bent)
        t, _ = step("tm", inst, g.ladder_for(inst, run, 0, inst.time_bound, 0))
        kind, j, _ = decode_all(g.honest_move(inst, t), 1)[1][0]
        assert (kind, j) == (T.SEGMENT, 1)

    def test_levels_within_bound(self):
        for n in range(1, 10):
            inst = doubler("1" * n)
            levels = T.level_count(inst.time_bound, inst.spread)
            assert levels <= -(-inst.exponent // inst.epsilon) + 2

    def test_spread(self):
        assert T.spread_for(1, Fraction(1, 2)) == 2
        assert T.spread_for(9, Fraction(1, 2)) == 3
        assert T.spread_for(10, Fraction(1, 2)) == 4

    def test_kernel_matches_python_trace(self):
        inst = doubler("111")
        m = inst.machine
        rules = {(q, m.alphabet[s]): (nq, m.alphabet[w], mv) for q, s, nq, w, mv in m.rules}
        got = T.run_from(m, inst.initial(), inst.time_bound, inst.space_bound)
        assert m.text(got[2:]) == oracles.run_tm(rules, m.alphabet, "111", inst.time_bound, inst.space_bound)


# --- optimization -------------------------------------------------------------------

def classifier(samples, counters, q=None, model=O.Hyperplane(0, (1, -1))):
    return O.OptInstance("classifier", samples, model, tuple(counters),
                         counters[-1] if q is None else q)


class TestOpt:
    def test_classifier_correct(self):
        inst = classifier((((2, 1), 1),), [0, 1])
        assert play("opt", inst, *honest_pair("opt")).winner == PROVER

    def test_classifier_bad_update(self):
        inst = classifier((((2, 1), 0),), [0, 1])
        g = get_game("opt")
        mv = g.honest_move(inst, Transcript(g.spec(inst), "s"))
        assert decode_all(mv, 2)[1][0] == [O.BAD_UPDATE, 0]
        assert play("opt", inst, *honest_pair("opt")).winner == CHALLENGER

    def test_counter_jump(self):
        xs = tuple(((k, 0), 1) for k in range(1, 7))
        ks = [0, 1, 2, 3, 4, 6, 7]
        inst = classifier(xs, ks)
        g = get_game("opt")
        assert decode_all(g.honest_move(inst, Transcript(g.spec(inst), "s")), 2)[1][0] == [O.BAD_UPDATE, 4]

    def test_nonzero_start_checked_first(self):
        inst = classifier((((2, 1), 1),), [1, 2])
        _, v = step("opt", inst, encode(O.CHALLENGE, [O.BAD_QUALITY], []))
        assert v.outcome == CHALLENGER_WINS

    def test_factorization(self):
        ok = O.OptInstance("factorization", target=12, factors=(2, 2, 3), quality_q=3)
        assert play("opt", ok, *honest_pair("opt")).winner == PROVER
        bad = O.OptInstance("factorization", target=12, factors=(2, 6), quality_q=3)
        g = get_game("opt")
        assert g.honest_move(bad, Transcript(g.spec(bad), "s")) == encode(O.CHALLENGE, [O.COUNT], [])
        assert play("opt", bad, *honest_pair("opt")).winner == CHALLENGER

    def test_unsorted_factors(self):
        inst = O.OptInstance("factorization", target=60, factors=(2, 5, 3, 2), quality_q=4)
        g = get_game("opt")
        assert g.honest_move(inst, Transcript(g.spec(inst), "s")) == encode(O.CHALLENGE, [O.ORDER, 2], [])

    def test_product_ladder(self):
        inst = O.OptInstance("factorization", target=12, factors=(2, 2, 2), quality_q=3)
        assert play("opt", inst, *honest_pair("opt")).winner == CHALLENGER

    def test_tree_model(self):
        tree = O.DecisionTree(((0, 0, 1, 2), (-1, 0, 0, 0), (-1, 1, 0, 0)))
        xs = (((-1, 0), 0), ((3, 0), 1), ((2, 5), 0))
        ks = oracles.classifier_counts(xs, tree)
        inst = classifier(xs, ks, model=tree)
        assert get_game("opt").is_correct(inst)
        assert play("opt", inst, *honest_pair("opt")).winner == PROVER
        assert O.model_from(tree.flat()) == tree

    def test_solve_matches_oracle(self):
        g = get_game("opt")
        for seed in range(5):
            inst = g.generate(8, random.Random(seed))
            assert list(inst.counters) == oracles.classifier_counts(inst.samples, inst.model)
            f = g.generate(3, random.Random(seed), validity_kind="factorization")
            assert list(f.factors) == oracles.factorize(f.target)


# --- shared game contract -------------------------------------------------------------

@pytest.mark.parametrize("kind", sorted(GAMES))
def test_fixture_round_trip(kind):
    g = get_game(kind)
    inst = g.generate(3, random.Random(5))
    assert g.loads(g.dumps(inst)) == inst


@pytest.mark.parametrize("kind", sorted(GAMES))
def test_claim_round_trip(kind):
    g = get_game(kind)
    inst = g.generate(3, random.Random(6))
    assert g.bind(inst, g.claim_payload(inst)) == inst


@pytest.mark.parametrize("kind", sorted(GAMES))
def test_error_models_never_correct(kind):
    g = get_game(kind)
    for seed in range(20):
        inst = g.generate(4, random.Random(seed))
        for model in g.error_models:
            assert not g.is_correct(g.corrupt(inst, model, random.Random(seed)))


@pytest.mark.parametrize("kind", sorted(GAMES))
def test_oracle_agreement(kind):
    """Honest challengers object exactly when the claim is wrong."""
    g = get_game(kind)
    for seed in range(10):
        inst = g.generate(4, random.Random(seed))
        for cand in [inst] + [g.corrupt(inst, m, random.Random(seed)) for m in g.error_models]:
            objects = g.honest_move(cand, Transcript(g.spec(cand), "s")) is not None
            assert objects == (not g.is_correct(cand))


def test_unknown_error_model():
    with pytest.raises(GameConfigError):
        make_prover("corrupt", "matmul", 0, error_model="swap_adjacent")
