import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scholarlink.errors import (
    DatasetSchemaError,
    DimensionMismatchError,
    DivergedLossError,
    EmptyCandidatesError,
    EmptyDatasetError,
    EmptyTextError,
    FormatVersionError,
    SimOutOfRangeError,
)
from scholarlink.kgstore import PERSON
from scholarlink.labelindex import Candidate
from scholarlink.reranker import (
    FEATURE_DIM,
    KG_DIM,
    SIM_INDEX,
    TEXT_DIM,
    RerankTrainConfig,
    SiameseParams,
    TrainingRecord,
    build_training_set,
    compose_entity,
    compose_question,
    cosine_distance,
    forward,
    grad_check_triplet,
    load_siamese,
    load_training_file,
    rank,
    save_siamese,
    string_similarity,
    train_reranker,
    triplet_loss,
    triplet_loss_and_grads,
)
from scholarlink.synthdata import separable_triplet_sets
from scholarlink.textencoder import HashEncoder, encode

from oracles import cosine_distance_ref, siamese_forward_ref, window_similarity


def tiny_params(seed: int = 0, in_dim: int = 6, hidden: int = 5, out: int = 4) -> SiameseParams:
    cfg = RerankTrainConfig(in_dim=in_dim, hidden_dim=hidden, out_dim=out, seed=seed)
    return SiameseParams.init(cfg)


# -- string similarity --------------------------------------------------------


def test_similarity_exact_substring():
    assert string_similarity("Ashish Vaswani", "co-authors of Ashish Vaswani?") == 1.0


def test_similarity_typo_window():
    # A misspelled label against a question holding the correct title.
    label = "attention is all you ned"
    question = "Who wrote attention is all you need?"
    got = string_similarity(label, question)
    assert got == pytest.approx(window_similarity(label, question))
    assert 0.9 < got < 1.0


def test_similarity_question_shorter_than_label():
    # Whole question is the only window; denominator is the label width.
    got = string_similarity("attention is all you need", "attention")
    assert got == pytest.approx(window_similarity("attention is all you need", "attention"))
    assert 0.0 < got < 1.0


def test_similarity_empty_inputs_raise():
    with pytest.raises(EmptyTextError):
        string_similarity("  ", "question")
    with pytest.raises(EmptyTextError):
        string_similarity("label", " \t ")


@settings(max_examples=60, deadline=None)
@given(
    st.text(alphabet="abcdefg h", min_size=1, max_size=12),
    st.text(alphabet="abcdefg h", min_size=1, max_size=30),
)
def test_similarity_matches_window_oracle(label, question):
    from scholarlink.textnorm import normalize

    if not normalize(label) or not normalize(question):
        return
    got = string_similarity(label, question)
    assert got == pytest.approx(window_similarity(label, question))
    assert 0.0 <= got <= 1.0


# -- feature composition --------------------------------------------------------


def test_compose_question_layout():
    q = encode(HashEncoder(), "who wrote this")
    fv = compose_question(q)
    assert fv.shape == (FEATURE_DIM,)
    assert np.array_equal(fv[:TEXT_DIM], q)
    assert np.all(fv[TEXT_DIM:] == 0.0)


def test_compose_entity_layout():
    label = encode(HashEncoder(), "some label")
    kg = np.full(KG_DIM, 0.25)
    fv = compose_entity(label, kg, 0.75)
    assert np.array_equal(fv[:TEXT_DIM], label)
    assert np.array_equal(fv[TEXT_DIM:SIM_INDEX], kg)
    assert fv[SIM_INDEX] == 0.75


def test_compose_rejects_bad_shapes():
    with pytest.raises(DimensionMismatchError):
        compose_question(np.zeros(10))
    with pytest.raises(DimensionMismatchError):
        compose_entity(np.zeros(TEXT_DIM), np.zeros(KG_DIM + 1), 0.5)


@pytest.mark.parametrize("sim", [-0.01, 1.01, float("nan"), float("inf")])
def test_compose_rejects_bad_similarity(sim):
    with pytest.raises(SimOutOfRangeError):
        compose_entity(np.zeros(TEXT_DIM), np.zeros(KG_DIM), sim)


# -- forward pass ----------------------------------------------------------------


def test_forward_hand_example():
    # One hidden unit active, one clamped to zero by the rectifier.
    params = SiameseParams(
        W1=np.array([[1.0, 0.0], [-1.0, 0.0]]),
        b1=np.array([0.0, 0.0]),
        W2=np.array([[1.0, 1.0]]),
        b2=np.array([0.5]),
    )
    assert forward(params, np.array([2.0, 7.0])) == pytest.approx([2.5])
    assert forward(params, np.array([-2.0, 7.0])) == pytest.approx([2.5])


def test_forward_matches_oracle():
    rng = np.random.default_rng(7)
    params = tiny_params(seed=3)
    X = rng.normal(size=(20, 6))
    got = forward(params, X)
    for i in range(X.shape[0]):
        want = siamese_forward_ref(params.W1, params.b1, params.W2, params.b2, X[i])
        np.testing.assert_allclose(got[i], want, atol=1e-12)


def test_forward_batch_matches_singles():
    rng = np.random.default_rng(1)
    params = tiny_params()
    X = rng.normal(size=(5, 6))
    batch = forward(params, X)
    for i in range(5):
        np.testing.assert_allclose(batch[i], forward(params, X[i]), rtol=1e-12)


def test_forward_rejects_wrong_width():
    with pytest.raises(DimensionMismatchError):
        forward(tiny_params(), np.zeros(7))


def test_cosine_distance_identities():
    u = np.array([1.0, 2.0, 3.0])
    assert cosine_distance(u, u) == pytest.approx(0.0)
    assert cosine_distance(u, -u) == pytest.approx(2.0)
    assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(1.0)
    assert cosine_distance(np.zeros(3), u) == 1.0
    assert cosine_distance(u, np.zeros(3)) == 1.0


def test_cosine_distance_matches_oracle():
    rng = np.random.default_rng(2)
    for _ in range(50):
        u = rng.normal(size=8)
        v = rng.normal(size=8)
        assert cosine_distance(u, v) == pytest.approx(cosine_distance_ref(u, v), abs=1e-12)
        assert 0.0 <= cosine_distance(u, v) <= 2.0


# -- triplet loss -----------------------------------------------------------------


def test_triplet_loss_formula():
    rng = np.random.default_rng(4)
    params = tiny_params(seed=4)
    a, p, n = rng.normal(size=(3, 6))
    fa, fp, fn = forward(params, a), forward(params, p), forward(params, n)
    want = max(
        0.0,
        float(np.linalg.norm(fa - fp)) - float(np.linalg.norm(fa - fn)) + 1.0,
    )
    assert triplet_loss(params, a, p, n) == pytest.approx(want)


def test_triplet_loss_inactive_when_negative_far():
    params = tiny_params(seed=5)
    a = np.ones(6)
    # Positive identical to the anchor, negative far away, huge margin gap.
    n = a * 50.0
    if triplet_loss(params, a, a, n, margin=0.1) == 0.0:
        loss, grads = triplet_loss_and_grads(params, a[None], a[None], n[None], 0.1)
        assert loss == 0.0
        for g in grads.values():
            assert np.all(g == 0.0)


def test_batch_loss_is_mean_of_singles():
    rng = np.random.default_rng(6)
    params = tiny_params(seed=6)
    A, P, N = rng.normal(size=(3, 4, 6))
    batch_loss, _ = triplet_loss_and_grads(params, A, P, N, 1.0)
    singles = [triplet_loss(params, A[i], P[i], N[i]) for i in range(4)]
    assert batch_loss == pytest.approx(np.mean(singles))


def test_grad_check_triplet_small():
    assert grad_check_triplet(n_points=10, seed=1) < 1e-4


# -- training ----------------------------------------------------------------------


def test_training_reduces_loss_on_separable_set():
    train, _ = separable_triplet_sets(n_train=60, n_heldout=1, seed=9)
    losses: list[float] = []
    cfg = RerankTrainConfig(hidden_dim=64, out_dim=32, epochs=120, learning_rate=0.05, seed=9)
    train_reranker(train, cfg, on_epoch=lambda _, loss: losses.append(loss))
    assert len(losses) == 120
    assert losses[-1] < 0.1 * losses[0]


def test_training_is_deterministic():
    train, _ = separable_triplet_sets(n_train=20, n_heldout=1, seed=2)
    cfg = RerankTrainConfig(hidden_dim=16, out_dim=8, epochs=10, seed=2)
    assert train_reranker(train, cfg) == train_reranker(train, cfg)


def test_training_rejects_empty_and_mismatched():
    with pytest.raises(EmptyDatasetError):
        train_reranker([])
    bad = [(np.zeros(6), np.zeros(6), np.zeros(7))]
    cfg = RerankTrainConfig(in_dim=6, hidden_dim=4, out_dim=3, epochs=1)
    with pytest.raises(DimensionMismatchError):
        train_reranker(bad, cfg)


def test_training_diverged_loss_raises():
    # A step size huge enough to overflow float64 on the next epoch.
    train, _ = separable_triplet_sets(n_train=20, n_heldout=1, seed=3)
    cfg = RerankTrainConfig(hidden_dim=16, out_dim=8, epochs=400, learning_rate=1e200, seed=3)
    with np.errstate(all="ignore"), pytest.raises(DivergedLossError):
        train_reranker(train, cfg)


def test_config_rejects_nonpositive_margin():
    with pytest.raises(ValueError):
        RerankTrainConfig(margin=0.0)


# -- ranking ----------------------------------------------------------------------


def cand(uri: str) -> Candidate:
    return Candidate(uri, "label", PERSON, 1.0, 1.0)


def test_rank_orders_by_distance_then_uri():
    params = tiny_params(seed=8, in_dim=6)
    rng = np.random.default_rng(8)
    q = rng.normal(size=6)
    near = q + rng.normal(size=6) * 1e-3
    far = -q
    ranked = rank(params, q, [(cand("u:far"), far), (cand("u:near"), near)])
    assert [e.uri for e in ranked] == ["u:near", "u:far"]
    assert ranked[0].distance <= ranked[1].distance
    # Identical vectors tie; the uri breaks it.
    tied = rank(params, q, [(cand("u:b"), near), (cand("u:a"), near)])
    assert [e.uri for e in tied] == ["u:a", "u:b"]


def test_rank_distances_are_cosine():
    params = tiny_params(seed=9)
    rng = np.random.default_rng(9)
    q = rng.normal(size=6)
    v = rng.normal(size=6)
    ranked = rank(params, q, [(cand("u:x"), v)])
    want = cosine_distance_ref(forward(params, q), forward(params, v))
    assert ranked[0].distance == pytest.approx(want)


def test_rank_invariant_under_output_scaling():
    # Scaling the output layer rescales every embedding by the same
    # positive factor, which cosine distance ignores.
    params = tiny_params(seed=10)
    scaled = SiameseParams(params.W1, params.b1, params.W2 * 3.5, params.b2 * 3.5)
    rng = np.random.default_rng(10)
    q = rng.normal(size=6)
    cands = [(cand(f"u:{i}"), rng.normal(size=6)) for i in range(6)]
    base = rank(params, q, cands)
    other = rank(scaled, q, cands)
    assert [e.uri for e in base] == [e.uri for e in other]
    for x, y in zip(base, other):
        assert x.distance == pytest.approx(y.distance)


def test_rank_rejects_empty():
    with pytest.raises(EmptyCandidatesError):
        rank(tiny_params(), np.zeros(6), [])


# -- persistence -------------------------------------------------------------------


def test_siamese_round_trip(tmp_path):
    params = tiny_params(seed=11, in_dim=9, hidden=7, out=3)
    path = tmp_path / "net.bin"
    save_siamese(params, path)
    assert load_siamese(path) == params


def test_siamese_saves_identical_bytes(tmp_path):
    params = tiny_params(seed=12)
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    save_siamese(params, a)
    save_siamese(params, b)
    assert a.read_bytes() == b.read_bytes()


def test_siamese_rejects_foreign_and_truncated(tmp_path):
    params = tiny_params(seed=13)
    path = tmp_path / "net.bin"
    save_siamese(params, path)
    data = path.read_bytes()
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(FormatVersionError):
        load_siamese(bad)
    bad.write_bytes(data[: len(data) // 2])
    with pytest.raises(FormatVersionError):
        load_siamese(bad)


# -- training files ------------------------------------------------------------------


def test_load_training_file(tmp_path):
    path = tmp_path / "train.tsv"
    path.write_text(
        "# header comment\n"
        "who wrote x\thttp://e/1\thttp://e/2\n"
        "\n"
        "who wrote y\thttp://e/3\thttp://e/4\n",
        encoding="utf-8",
    )
    records = load_training_file(path)
    assert records == [
        TrainingRecord("who wrote x", "http://e/1", "http://e/2"),
        TrainingRecord("who wrote y", "http://e/3", "http://e/4"),
    ]


def test_load_training_file_errors(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("only two\tfields\n", encoding="utf-8")
    with pytest.raises(DatasetSchemaError):
        load_training_file(path)
    path.write_text("q\t\thttp://e/2\n", encoding="utf-8")
    with pytest.raises(DatasetSchemaError):
        load_training_file(path)
    path.write_text("# nothing here\n", encoding="utf-8")
    with pytest.raises(EmptyDatasetError):
        load_training_file(path)


def test_build_training_set(store, kg_embeddings):
    uris = sorted(store.records)[:2]
    first = store.get(uris[0])
    records = [TrainingRecord(f"who wrote about {first.label}", uris[0], uris[1])]

    plain = build_training_set(records, store)
    anchor, pos, neg = plain[0]
    assert anchor.shape == pos.shape == neg.shape == (FEATURE_DIM,)
    assert np.all(anchor[TEXT_DIM:] == 0.0)
    # Without embeddings the KG block stays zero.
    assert np.all(pos[TEXT_DIM:SIM_INDEX] == 0.0)
    assert pos[SIM_INDEX] == pytest.approx(
        string_similarity(first.label, records[0].question)
    )

    emb = next(iter(kg_embeddings.values()))
    with_kg = build_training_set(records, store, embeddings=emb)
    vec = emb.entity_vector(uris[0])
    if vec is not None:
        np.testing.assert_array_equal(with_kg[0][1][TEXT_DIM:SIM_INDEX], vec)


def test_build_training_set_unknown_uri(store):
    records = [TrainingRecord("q", "http://nowhere/x", "http://nowhere/y")]
    with pytest.raises(DatasetSchemaError):
        build_training_set(records, store)
