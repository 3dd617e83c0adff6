import numpy as np
import pytest

from scholarlink.errors import (
    ConfigError,
    DimensionMismatchError,
    DivergedLossError,
    FormatVersionError,
    KindMismatchError,
    NoTrainableTriplesError,
)
from scholarlink.kgembed import (
    EmbeddingKind,
    EmbedTrainConfig,
    build_vocab,
    export_tsv,
    filtered_ranking,
    grad_check,
    import_tsv,
    init_embeddings,
    load_embeddings,
    logistic_loss,
    save_embeddings,
    score,
    transe_pair_loss,
    train_embeddings,
)
from scholarlink import synthdata

from oracles import complex_score_ref, distmult_score_ref, transe_score_ref


def rand_triple(rng, dim):
    return rng.normal(size=dim), rng.normal(size=dim), rng.normal(size=dim)


# -- frozen score examples ------------------------------------------------


def test_transe_score_example():
    assert score(EmbeddingKind.TRANSE, np.zeros(2), np.zeros(2), np.array([3.0, 4.0])) == -5.0


def test_distmult_score_example():
    got = score(
        EmbeddingKind.DISTMULT,
        np.array([1.0, 2.0]),
        np.array([1.0, 1.0]),
        np.array([3.0, 1.0]),
    )
    assert got == 5.0


def test_complex_score_example():
    # dim 2: first component real, second imaginary. h = i, r = 1, t = i
    # gives Re(i * 1 * conj(i)) = Re(1) = 1.
    h = np.array([0.0, 1.0])
    r = np.array([1.0, 0.0])
    t = np.array([0.0, 1.0])
    assert score(EmbeddingKind.COMPLEX, h, r, t) == pytest.approx(1.0)


def test_score_shape_validation():
    with pytest.raises(DimensionMismatchError):
        score(EmbeddingKind.TRANSE, np.zeros(3), np.zeros(2), np.zeros(3))


def test_complex_requires_even_dimension():
    with pytest.raises(ConfigError):
        score(EmbeddingKind.COMPLEX, np.zeros(3), np.zeros(3), np.zeros(3))


# -- identities over seeded random triples -----------------------------------


def test_scores_match_independent_oracles():
    rng = np.random.default_rng(0)
    for _ in range(200):
        h, r, t = rand_triple(rng, 8)
        assert score(EmbeddingKind.TRANSE, h, r, t) == pytest.approx(
            transe_score_ref(h, r, t), abs=1e-12
        )
        assert score(EmbeddingKind.DISTMULT, h, r, t) == pytest.approx(
            distmult_score_ref(h, r, t), abs=1e-10
        )
        assert score(EmbeddingKind.COMPLEX, h, r, t) == pytest.approx(
            complex_score_ref(h, r, t), abs=1e-10
        )


def test_distmult_head_tail_swap_symmetry():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        h, r, t = rand_triple(rng, 6)
        assert score(EmbeddingKind.DISTMULT, h, r, t) == score(EmbeddingKind.DISTMULT, t, r, h)


def test_complex_with_zero_imaginary_equals_distmult():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        a = rng.normal(size=3)
        c = rng.normal(size=3)
        e = rng.normal(size=3)
        h = np.concatenate([a, np.zeros(3)])
        r = np.concatenate([c, np.zeros(3)])
        t = np.concatenate([e, np.zeros(3)])
        diff = score(EmbeddingKind.COMPLEX, h, r, t) - score(EmbeddingKind.DISTMULT, a, c, e)
        assert abs(diff) <= 1e-12


def test_transe_zero_iff_translation_holds():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        h, r, _ = rand_triple(rng, 5)
        assert score(EmbeddingKind.TRANSE, h, r, h + r) == 0.0
        t = h + r + rng.normal(size=5) * 0.1 + 0.05
        if not np.allclose(h + r, t):
            assert score(EmbeddingKind.TRANSE, h, r, t) < 0.0


# -- losses --------------------------------------------------------------------


def test_transe_pair_loss_hinge_inactive_is_zero():
    h = np.zeros(2)
    r = np.zeros(2)
    t = np.zeros(2)  # d_pos = 0
    t_neg = np.array([10.0, 0.0])  # d_neg = 10 >> margin
    loss, grads = transe_pair_loss(h, r, t, h, t_neg, margin=1.0)
    assert loss == 0.0
    assert all(np.all(g == 0.0) for g in grads.values())


def test_transe_pair_loss_active_value():
    h = np.zeros(2)
    r = np.zeros(2)
    t = np.array([3.0, 4.0])  # d_pos = 5
    t_neg = np.array([0.0, 2.0])  # d_neg = 2
    loss, _ = transe_pair_loss(h, r, t, h, t_neg, margin=1.0)
    assert loss == pytest.approx(5.0 - 2.0 + 1.0)


def test_logistic_loss_matches_formula():
    rng = np.random.default_rng(4)
    for kind in (EmbeddingKind.DISTMULT, EmbeddingKind.COMPLEX):
        for y in (1, -1):
            h, r, t = rand_triple(rng, 4)
            loss, _ = logistic_loss(kind, h, r, t, y)
            s = score(kind, h, r, t)
            assert loss == pytest.approx(float(np.logaddexp(0.0, -y * s)), abs=1e-12)


# -- gradient checks -------------------------------------------------------------


@pytest.mark.parametrize("kind", list(EmbeddingKind))
def test_grad_check_all_kinds(kind):
    assert grad_check(kind, dim=8, n_points=25, seed=0) < 1e-4


# -- training ---------------------------------------------------------------------


def test_build_vocab_sorted():
    entities, relations = build_vocab([("b", "r2", "a"), ("a", "r1", "c")])
    assert list(entities) == ["a", "b", "c"]
    assert list(relations) == ["r1", "r2"]


def test_init_bounds_and_determinism():
    entities = {"a": 0, "b": 1}
    relations = {"r": 0}
    e1 = init_embeddings(EmbeddingKind.DISTMULT, 16, entities, relations, seed=9)
    e2 = init_embeddings(EmbeddingKind.DISTMULT, 16, entities, relations, seed=9)
    bound = 1.0 / np.sqrt(16)
    assert np.all(np.abs(e1.entity_vecs) <= bound)
    assert np.all(np.abs(e1.relation_vecs) <= bound)
    assert e1 == e2


def test_train_requires_triples():
    with pytest.raises(NoTrainableTriplesError):
        train_embeddings([], EmbedTrainConfig(dim=4), EmbeddingKind.TRANSE)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        EmbedTrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        EmbedTrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        EmbedTrainConfig(margin=-1.0)
    with pytest.raises(ConfigError):
        EmbedTrainConfig(negatives_per_positive=0)


def test_train_deterministic_per_seed():
    triples = synthdata.toy_kg(n_triples=40, seed=0)
    cfg = EmbedTrainConfig(dim=8, epochs=3, seed=12)
    a = train_embeddings(triples, cfg, EmbeddingKind.DISTMULT)
    b = train_embeddings(triples, cfg, EmbeddingKind.DISTMULT)
    assert a == b
    c = train_embeddings(triples, EmbedTrainConfig(dim=8, epochs=3, seed=13), EmbeddingKind.DISTMULT)
    assert c != a


def test_transe_rows_unit_norm_after_training():
    triples = synthdata.toy_kg(n_triples=60, seed=1)
    emb = train_embeddings(triples, EmbedTrainConfig(dim=8, epochs=2, seed=0), EmbeddingKind.TRANSE)
    norms = np.linalg.norm(emb.entity_vecs, axis=1)
    # Every row touched by an active update is renormalized; allow the
    # initialization norm (below 1) for never-touched rows.
    assert np.all(norms <= 1.0 + 1e-9)


def test_train_reports_loss_curve():
    triples = synthdata.toy_kg(n_triples=40, seed=2)
    losses = []
    train_embeddings(
        triples,
        EmbedTrainConfig(dim=8, epochs=4, seed=1),
        EmbeddingKind.TRANSE,
        on_epoch=lambda e, l: losses.append((e, l)),
    )
    assert [e for e, _ in losses] == [0, 1, 2, 3]
    assert all(np.isfinite(l) for _, l in losses)


def test_train_diverged_loss_raises():
    triples = synthdata.toy_kg(n_triples=40, seed=3)
    with np.errstate(all="ignore"), pytest.raises(DivergedLossError):
        train_embeddings(
            triples,
            EmbedTrainConfig(dim=8, epochs=60, learning_rate=1e6, seed=0),
            EmbeddingKind.DISTMULT,
        )


# -- filtered ranking -------------------------------------------------------------


def hand_embeddings():
    # Three entities on a line, one relation moving +1 in dim 0, TransE.
    entities = {"e0": 0, "e1": 1, "e2": 2}
    relations = {"step": 0}
    ev = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    rv = np.array([[1.0, 0.0]])
    from scholarlink.kgembed import KgEmbeddingSet

    return KgEmbeddingSet(EmbeddingKind.TRANSE, 2, entities, relations, ev, rv)


def test_filtered_ranking_hand_example():
    emb = hand_embeddings()
    known = [("e0", "step", "e1"), ("e1", "step", "e2")]
    metrics = filtered_ranking(emb, [("e0", "step", "e1")], known, sides=("tail",))
    assert metrics.ranks == [1]
    assert metrics.hits_at_1 == 1.0
    assert metrics.mrr == 1.0


def test_filtered_ranking_masks_known_positives():
    emb = hand_embeddings()
    # e1 scores as well as e1' would; mask a competing known positive and
    # the test triple must keep rank 1 rather than tie-breaking against it.
    known = [("e0", "step", "e1"), ("e0", "step", "e2")]
    with_mask = filtered_ranking(emb, [("e0", "step", "e1")], known, sides=("tail",))
    without_mask = filtered_ranking(emb, [("e0", "step", "e1")], [], sides=("tail",))
    assert with_mask.ranks == [1]
    assert without_mask.ranks == [1]  # e2 scores worse anyway
    assert with_mask.hits_at_10 == 1.0


def test_filtered_ranking_both_sides_doubles_rank_count():
    emb = hand_embeddings()
    metrics = filtered_ranking(emb, [("e0", "step", "e1")], [], sides=("tail", "head"))
    assert len(metrics.ranks) == 2


# -- persistence and interop ----------------------------------------------------


@pytest.fixture(scope="module")
def trained_small():
    triples = synthdata.toy_kg(n_triples=50, seed=4)
    return train_embeddings(triples, EmbedTrainConfig(dim=8, epochs=2, seed=2), EmbeddingKind.COMPLEX)


def test_embeddings_roundtrip(trained_small, tmp_path):
    path = tmp_path / "emb.bin"
    save_embeddings(trained_small, path)
    assert load_embeddings(path) == trained_small


def test_embeddings_saves_byte_identical(trained_small, tmp_path):
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_embeddings(trained_small, p1)
    save_embeddings(trained_small, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_embeddings_expect_kind_mismatch(trained_small, tmp_path):
    path = tmp_path / "emb.bin"
    save_embeddings(trained_small, path)
    assert load_embeddings(path, expect_kind=EmbeddingKind.COMPLEX).kind is EmbeddingKind.COMPLEX
    with pytest.raises(KindMismatchError):
        load_embeddings(path, expect_kind=EmbeddingKind.TRANSE)


def test_embeddings_truncated_file(trained_small, tmp_path):
    path = tmp_path / "emb.bin"
    save_embeddings(trained_small, path)
    cut = tmp_path / "cut.bin"
    cut.write_bytes(path.read_bytes()[:40])
    with pytest.raises(FormatVersionError):
        load_embeddings(cut)


def test_tsv_export_import_roundtrip(trained_small, tmp_path):
    epath, rpath = tmp_path / "ent.tsv", tmp_path / "rel.tsv"
    export_tsv(trained_small, epath, rpath)
    back = import_tsv(EmbeddingKind.COMPLEX, epath, rpath)
    assert back == trained_small


def test_tsv_import_rejects_ragged_rows(tmp_path):
    epath, rpath = tmp_path / "ent.tsv", tmp_path / "rel.tsv"
    epath.write_text("a\t1.0\t2.0\nb\t1.0\n")
    rpath.write_text("r\t1.0\t2.0\n")
    with pytest.raises(DimensionMismatchError):
        import_tsv(EmbeddingKind.DISTMULT, epath, rpath)


def test_entity_vector_lookup(trained_small):
    uri = next(iter(trained_small.entities))
    vec = trained_small.entity_vector(uri)
    assert vec.shape == (8,)
    assert trained_small.entity_vector("missing:uri") is None
