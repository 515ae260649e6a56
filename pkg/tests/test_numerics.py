import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from elbert.numerics import (AdamState, Mlp, MlpSpec, NonFiniteError, ShapeError, Tensor, adam_step, backward,
                             categorical_entropy, categorical_policy, clip_by_global_norm, forward,
                             largest_remainder, multinomial_log_prob, multinomial_policy, predict, sample_index,
                             sgd_step)
from elbert.numerics import tensor as T
from elbert.numerics.checkpoint import (decode_adam, decode_array, decode_mlp, encode_adam, encode_array,
                                        encode_mlp, load_json, save_json)
from oracles import central_difference, mlp_forward_loops, rel_close

specs = st.builds(
    MlpSpec,
    input_dim=st.integers(1, 5),
    hidden_dims=st.lists(st.integers(1, 6), min_size=1, max_size=3).map(tuple),
    output_dim=st.integers(1, 4),
    activation=st.sampled_from(["tanh", "identity"]),
)


@settings(max_examples=30, deadline=None)
@given(spec=specs, seed=st.integers(0, 2**32 - 1))
def test_forward_matches_loop_oracle(spec, seed):
    rng = np.random.default_rng(seed)
    net = Mlp.init(spec, rng)
    x = rng.normal(size=(3, spec.input_dim))
    n = spec.num_layers
    W = [net.params[f"W{i}"] for i in range(n)]
    b = [net.params[f"b{i}"] for i in range(n)]
    expect = mlp_forward_loops(W, b, spec.activation, x)
    np.testing.assert_allclose(predict(spec, net.params, x), expect, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(forward(spec, net.leaves(), Tensor(x)).data, expect, rtol=1e-12, atol=1e-12)


def _composite_loss(spec, leaves, x, y, actions):
    out = forward(spec, leaves, Tensor(x))
    lp = T.log_softmax(out)
    picked = T.gather(lp, actions)
    sq = T.mean(T.square(T.sub(out, y)))
    ratio = T.exp(T.mul(picked, 0.3))
    surr = T.minimum(T.mul(ratio, 1.7), T.clip(ratio, 0.2, 5.0))
    return T.add(T.sub(sq, T.mean(surr)), T.mul(T.tsum(T.tanh(out)), 0.01))


@settings(max_examples=25, deadline=None)
@given(spec=specs, seed=st.integers(0, 2**32 - 1))
def test_gradients_match_finite_differences(spec, seed):
    rng = np.random.default_rng(seed)
    net = Mlp.init(spec, rng)
    x = rng.normal(size=(4, spec.input_dim))
    y = rng.normal(size=(4, spec.output_dim))
    actions = rng.integers(spec.output_dim, size=4)
    leaves = net.leaves()
    names = list(leaves)
    grads = backward(_composite_loss(spec, leaves, x, y, actions), [leaves[k] for k in names])
    for k, g in zip(names, grads):
        def f(v, k=k):
            p = {n: Tensor(net.params[n]) for n in names}
            p[k] = Tensor(v)
            return float(_composite_loss(spec, p, x, y, actions).data)
        fd = central_difference(f, net.params[k], 1e-6)
        tiny = np.abs(g) < 1e-8
        assert np.all(np.abs(fd[tiny] - g[tiny]) < 1e-6)
        assert np.all(rel_close(g[~tiny], fd[~tiny], 1e-5, atol=1e-9)), k


def test_relu_gradient_away_from_kinks():
    x = Tensor(np.array([[-1.0, 0.5, 2.0]]), requires_grad=True)
    g, = backward(T.tsum(T.mul(T.relu(x), np.array([[3.0, 4.0, 5.0]]))), [x])
    np.testing.assert_array_equal(g, [[0.0, 4.0, 5.0]])


def test_broadcast_add_gradient_sums_over_rows():
    a = Tensor(np.ones((3, 2)), requires_grad=True)
    b = Tensor(np.zeros(2), requires_grad=True)
    ga, gb = backward(T.tsum(T.add(a, b)), [a, b])
    np.testing.assert_array_equal(gb, [3.0, 3.0])
    np.testing.assert_array_equal(ga, np.ones((3, 2)))


def test_minimum_tie_goes_to_first_argument():
    a = Tensor(np.array([1.0]), requires_grad=True)
    b = Tensor(np.array([1.0]), requires_grad=True)
    ga, gb = backward(T.tsum(T.minimum(a, b)), [a, b])
    assert ga[0] == 1.0 and gb[0] == 0.0


def test_unreached_parameter_gets_zero_gradient():
    a = Tensor(np.array([2.0]), requires_grad=True)
    b = Tensor(np.array([5.0, 6.0]), requires_grad=True)
    b.grad = np.array([9.0, 9.0])
    ga, gb = backward(T.tsum(T.square(a)), [a, b])
    assert ga[0] == 4.0
    np.testing.assert_array_equal(gb, [0.0, 0.0])


def test_shared_subexpression_accumulates():
    a = Tensor(np.array([3.0]), requires_grad=True)
    s = T.square(a)
    g, = backward(T.tsum(T.add(s, s)), [a])
    assert g[0] == 12.0


def test_non_finite_ops_raise():
    with pytest.raises(NonFiniteError):
        T.log(Tensor(np.array([0.0])))
    with pytest.raises(NonFiniteError):
        T.exp(Tensor(np.array([1e4])))
    with pytest.raises(NonFiniteError):
        Tensor(np.array([np.nan]))


def test_shape_errors():
    with pytest.raises(ShapeError):
        T.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        backward(Tensor(np.ones(3)))
    spec = MlpSpec(3, (4,), 2)
    net = Mlp.init(spec, np.random.default_rng(0))
    with pytest.raises(ShapeError, match="layer"):
        forward(spec, net.leaves(), Tensor(np.ones((2, 5))))


def test_mlp_spec_validation():
    with pytest.raises(ValueError):
        MlpSpec(3, (), 2)
    with pytest.raises(ValueError):
        MlpSpec(3, (4,), 2, activation="sigmoid")


def test_orthogonal_init_and_small_output_layer():
    spec = MlpSpec(6, (8, 8), 3)
    net = Mlp.init(spec, np.random.default_rng(1), output_gain=0.01)
    W0, W1 = net.params["W0"], net.params["W1"]          # 6x8 and 8x8, gain sqrt(2)
    np.testing.assert_allclose(W0 @ W0.T, 2.0 * np.eye(6), atol=1e-12)
    np.testing.assert_allclose(W1.T @ W1, 2.0 * np.eye(8), atol=1e-12)
    assert np.abs(net.params["W2"]).max() < 0.05
    assert all(np.all(net.params[f"b{i}"] == 0) for i in range(3))


def test_adam_matches_hand_formula():
    p = {"w": np.array([1.0, -2.0])}
    g1 = {"w": np.array([0.5, -1.0])}
    g2 = {"w": np.array([-0.25, 0.0])}
    s = AdamState.zeros_like(p, 0.1)
    p1, s1 = adam_step(s, p, g1)
    p2, s2 = adam_step(s1, p1, g2)
    # hand evaluation of two bias-corrected steps
    m1 = 0.1 * g1["w"]
    v1 = 0.001 * g1["w"] ** 2
    e1 = p["w"] - 0.1 * (m1 / 0.1) / (np.sqrt(v1 / 0.001) + 1e-8)
    m2 = 0.9 * m1 + 0.1 * g2["w"]
    v2 = 0.999 * v1 + 0.001 * g2["w"] ** 2
    e2 = e1 - 0.1 * (m2 / (1 - 0.81)) / (np.sqrt(v2 / (1 - 0.999 ** 2)) + 1e-8)
    np.testing.assert_allclose(p1["w"], e1, rtol=1e-14)
    np.testing.assert_allclose(p2["w"], e2, rtol=1e-14)
    assert s2.step_count == 2
    assert p["w"][0] == 1.0  # inputs untouched


def test_adam_and_sgd_reject_bad_gradients():
    p = {"w": np.zeros(2)}
    with pytest.raises(NonFiniteError):
        adam_step(AdamState.zeros_like(p, 0.1), p, {"w": np.array([np.inf, 0.0])})
    with pytest.raises(ShapeError):
        sgd_step(p, {"w": np.zeros(3)}, 0.1)
    np.testing.assert_array_equal(sgd_step(p, {"w": np.ones(2)}, 0.5)["w"], [-0.5, -0.5])


def test_clip_by_global_norm():
    g = {"a": np.array([3.0]), "b": np.array([4.0])}
    c = clip_by_global_norm(g, 1.0)
    assert np.isclose(np.sqrt(c["a"] ** 2 + c["b"] ** 2)[0], 1.0)
    assert clip_by_global_norm(g, 10.0) is g


def test_adam_converges_on_quadratic():
    p = {"w": np.array([3.0, -4.0])}
    s = AdamState.zeros_like(p, 0.05)
    for _ in range(2000):
        p, s = adam_step(s, p, {"w": 2 * p["w"]})
    assert np.all(np.abs(p["w"]) < 1e-3)


def test_identical_seed_and_ops_give_identical_parameters():
    def train(seed):
        rng = np.random.default_rng(seed)
        spec = MlpSpec(4, (8, 8), 2)
        net = Mlp.init(spec, rng)
        s = AdamState.zeros_like(net.params, 1e-2)
        x = rng.normal(size=(16, 4))
        y = rng.normal(size=(16, 2))
        for _ in range(20):
            leaves = net.leaves()
            names = list(leaves)
            loss = T.mean(T.square(T.sub(forward(spec, leaves, Tensor(x)), y)))
            grads = dict(zip(names, backward(loss, [leaves[k] for k in names])))
            net.params, s = adam_step(s, net.params, grads)
        return net.params
    a, b = train(7), train(7)
    for k in a:
        assert a[k].tobytes() == b[k].tobytes()


def test_categorical_frequencies_within_three_sigma():
    logits = np.array([0.3, -1.0, 1.2, 0.0])
    p = np.exp(logits) / np.exp(logits).sum()
    rng = np.random.default_rng(0)
    n = 100_000
    counts = np.bincount([categorical_policy(logits, rng)[0] for _ in range(n)], minlength=4)
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) < 3 * sigma)


def test_categorical_log_prob_and_entropy():
    logits = np.array([2.0, 0.0])
    a, lp, ent = categorical_policy(logits, np.random.default_rng(0))
    p = np.exp(logits) / np.exp(logits).sum()
    assert np.isclose(lp, np.log(p[a]))
    assert np.isclose(ent, scipy.stats.entropy(p))
    assert np.isclose(categorical_entropy(np.zeros(5)), np.log(5))
    with pytest.raises(ValueError):
        categorical_policy(np.array([]), np.random.default_rng(0))
    with pytest.raises(NonFiniteError):
        categorical_policy(np.array([np.nan, 0.0]), np.random.default_rng(0))


def test_sample_index_skips_zero_weights():
    rng = np.random.default_rng(3)
    draws = {sample_index(np.array([0.0, 1.0, 0.0, 2.0, 0.0]), rng) for _ in range(2000)}
    assert draws == {1, 3}


@given(total=st.integers(0, 60), w=st.lists(st.floats(0.01, 10), min_size=1, max_size=8))
def test_largest_remainder_sums_and_stays_within_one(total, w):
    p = np.array(w) / np.sum(w)
    a = largest_remainder(total, p)
    assert a.sum() == total
    assert np.all(np.abs(a - total * p) < 1 + 1e-9)


def test_largest_remainder_example():
    np.testing.assert_array_equal(largest_remainder(6, np.array([0.5, 0.3, 0.2])), [3, 2, 1])
    np.testing.assert_array_equal(largest_remainder(2, np.array([1 / 3, 1 / 3, 1 / 3])), [1, 1, 0])


def test_multinomial_log_prob_matches_scipy():
    logits = np.array([0.2, -0.5, 1.0, 0.0, 0.3])
    p = np.exp(logits) / np.exp(logits).sum()
    rng = np.random.default_rng(0)
    for _ in range(20):
        alloc, lp, _ = multinomial_policy(logits, 6, rng)
        assert alloc.sum() == 6
        assert np.isclose(lp, scipy.stats.multinomial.logpmf(alloc, 6, p), rtol=1e-12)
        assert np.isclose(multinomial_log_prob(np.log(p), alloc), lp, rtol=1e-12)


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=0, max_size=20))
def test_array_hex_round_trip_is_bit_exact(vals):
    a = np.array(vals, dtype=np.float64)
    assert decode_array(encode_array(a)).tobytes() == a.tobytes()


def test_mlp_and_adam_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    net = Mlp.init(MlpSpec(3, (4, 5), 2, "relu"), rng)
    s = AdamState.zeros_like(net.params, 3e-4)
    _, s = adam_step(s, net.params, {k: rng.normal(size=v.shape) for k, v in net.params.items()})
    save_json({"net": encode_mlp(net), "opt": encode_adam(s)}, tmp_path / "c.json")
    d = load_json(tmp_path / "c.json")
    net2, s2 = decode_mlp(d["net"]), decode_adam(d["opt"])
    assert net2.spec == net.spec
    for k in net.params:
        assert net2.params[k].tobytes() == net.params[k].tobytes()
        assert s2.first_moment[k].tobytes() == s.first_moment[k].tobytes()
        assert s2.second_moment[k].tobytes() == s.second_moment[k].tobytes()
    assert s2.step_count == 1 and s2.learning_rate == 3e-4


def test_checkpoint_version_is_checked(tmp_path):
    (tmp_path / "c.json").write_text('{"format_version": 99}')
    with pytest.raises(ValueError, match="format"):
        load_json(tmp_path / "c.json")
