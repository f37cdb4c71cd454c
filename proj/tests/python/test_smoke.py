import math
import os
import tempfile

import numpy as np
import pytest

import mmrec


def write_block_data(d, n_users=30, n_items=20, per_user=6):
    rng = np.random.default_rng(3)
    with open(os.path.join(d, "interactions.tsv"), "w") as f:
        f.write("userID\titemID\ttimestamp\n")
        for u in range(n_users):
            block = u % 2
            pool = rng.permutation(n_items // 2)[:per_user] + block * (n_items // 2)
            for t, i in enumerate(pool):
                f.write(f"u{u:03d}\ti{i:03d}\t{t}\n")


def test_metrics_match_hand_values():
    assert mmrec.top_k([0.1, 0.9, 0.9, -math.inf], 3) == [1, 2, 0]
    assert mmrec.recall_at_k([3, 1, 7], [1, 2], 3) == pytest.approx(0.5)
    assert mmrec.precision_at_k([3, 1, 7], [1, 2], 3) == pytest.approx(1 / 3)
    assert mmrec.ndcg_at_k([1, 2], [1, 2], 2) == pytest.approx(1.0)
    assert mmrec.map_at_k([0, 5], [5], 2) == pytest.approx(0.5)
    with pytest.raises(mmrec.MmrecError):
        mmrec.recall_at_k([1], [], 1)


def test_k_core():
    edges = [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y"), ("c", "x")]
    assert sorted(mmrec.k_core(edges, 2)) == [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]


def test_matrix_round_trip():
    with tempfile.TemporaryDirectory() as d:
        values = np.arange(6, dtype=np.float64).reshape(2, 3) / 7
        path = os.path.join(d, "m.mmf8")
        mmrec.write_matrix(path, values, single=False)
        np.testing.assert_array_equal(mmrec.read_matrix(path), values)


def test_model_scores_and_loss():
    state = mmrec.init_params("mf_bpr", 3, 4, d=2, seed=1)
    train = [(0, 0), (1, 1), (2, 2)]
    scores = mmrec.score_all(state, 3, 4, train)
    np.testing.assert_allclose(scores, state.tensor("user_emb") @ state.tensor("item_emb").T, atol=1e-12)
    loss, grads = mmrec.calculate_loss(state, [(0, 0, 3)], train)
    assert loss > 0
    assert set(grads) == {"user_emb", "item_emb"}


def test_preprocess_train_evaluate_grid():
    with tempfile.TemporaryDirectory() as d:
        write_block_data(d)
        ds = mmrec.preprocess(os.path.join(d, "interactions.tsv"), k=2)
        assert ds.n_users == 30
        n = sum(len(ds.pairs(p)) for p in ("train", "valid", "test"))
        assert n == 30 * 6
        state = mmrec.init_params("mf_bpr", ds.n_users, ds.n_items, d=4)
        report = mmrec.evaluate(state, ds, "test", [5])
        assert set(report) == {"recall@5", "precision@5", "ndcg@5", "map@5"}

        with open(os.path.join(d, "exp.cfg"), "w") as f:
            f.write("interactions: interactions.tsv\nk: 2\nmodel: mf_bpr\nembedding_dim: 4\n"
                    "max_epochs: 2\nbatch_size: 32\nlearning_rate: [0.01, 0.05]\ntopk: [5, 10]\n")
        cfg = os.path.join(d, "exp.cfg")
        assert mmrec.grid_size(cfg) == 2
        result = mmrec.run_grid(cfg, os.path.join(d, "out"))
        assert len(result["runs"]) == 2
        assert all(r["ok"] for r in result["runs"])
        assert result["best"] in (0, 1)
        with open(os.path.join(d, "out", "summary.tsv")) as f:
            assert f.read() == result["summary"]
