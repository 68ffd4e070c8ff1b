"""Tests for the grid CRF, the colour model, the unary forest and the warm-start chains."""
import itertools

import numpy as np
import pytest

from weakimplicit.core.exceptions import (
    ConfigError,
    CorpusError,
    DimensionMismatchError,
    ImproperDistributionError,
)
from weakimplicit.core.prob import RngStream
from weakimplicit.models.segmentation import (
    ColorLikelihood,
    CorpusConfig,
    CrfPosterior,
    GenColorParams,
    GridGraph,
    SegCrfParams,
    SegDataset,
    SegExample,
    SegObservation,
    UnaryPredictor,
    WarmStartBuffer,
    WarmStartSampler,
    color_features,
    color_gibbs_sweep,
    crf_features,
    crf_gibbs_sweep,
    expected_color_features,
    load_corpus,
    marginal_frequencies,
    max_marginal_decode,
    pixel_features,
    seg_features,
    synthetic_corpus,
    unary_predict,
    unary_train,
)
from weakimplicit.models.segmentation.crf import local_scores
from weakimplicit.oracle import enumerate_grid, grid_energy, single_site_kernel


def _king_pairs(H, W):
    cells = [(i, j) for i in range(H) for j in range(W)]
    return {
        frozenset((i1 * W + j1, i2 * W + j2))
        for (i1, j1), (i2, j2) in itertools.combinations(cells, 2)
        if max(abs(i1 - i2), abs(j1 - j2)) == 1
    }


def test_grid_degrees():
    graph = GridGraph(4, 5)
    degree = graph.degree().reshape(4, 5)
    assert degree[1:-1, 1:-1].min() == 8 and degree[1:-1, 1:-1].max() == 8
    assert degree[0, 0] == 3 and degree[3, 4] == 3
    assert degree[0, 2] == 5 and degree[2, 0] == 5


def test_grid_edges_partition_neighbour_pairs():
    graph = GridGraph(3, 4)
    pairs = [frozenset((int(s), int(d))) for src, dst in graph.edges.values() for s, d in zip(src, dst)]
    assert len(pairs) == len(set(pairs)) == graph.num_edges
    assert set(pairs) == _king_pairs(3, 4)


def test_single_pixel_grid_has_no_edges():
    graph = GridGraph(1, 1)
    assert graph.num_edges == 0
    assert graph.neighbors(0) == []


def test_scan_orders():
    graph = GridGraph(4, 4)
    raster = graph.scan_order('raster')
    assert [int(s[0]) for s in raster] == list(range(16))
    blocked = graph.scan_order('blocked')
    assert sorted(np.concatenate(blocked).tolist()) == list(range(16))
    for group in blocked:
        members = set(group.tolist())
        for site in group:
            assert not members & {j for j, _ in graph.neighbors(int(site))}
    with pytest.raises(ValueError):
        graph.scan_order('zigzag')


def test_crf_params_layout(rng):
    theta = rng.normal(size=81)
    params = SegCrfParams.from_vector(theta, 3)
    assert np.array_equal(params.to_vector(), theta)
    assert CrfPosterior(theta, 3).feature_dim == 9 * 3 ** 2
    with pytest.raises(DimensionMismatchError):
        SegCrfParams.from_vector(np.zeros(80), 3)


def _random_instance(rng, H=3, W=3, L=3):
    params = SegCrfParams.from_vector(rng.normal(size=9 * L * L), L)
    image = rng.uniform((H, W, 3))
    unary = rng.integers(0, L, size=(H, W))
    labeling = rng.integers(0, L, size=(H, W))
    return params, image, unary, labeling


def test_features_dot_parameters_is_energy(rng):
    for k in range(5):
        params, image, unary, labeling = _random_instance(rng.child(k))
        eta = crf_features(SegObservation(image, unary), labeling, 3)
        assert abs(eta @ params.to_vector() - grid_energy(params, image, unary, labeling)) <= 1e-9


def test_single_pixel_features():
    obs = SegObservation(np.full((1, 1, 3), 0.3), np.array([[1]]))
    eta = crf_features(obs, np.array([[2]]), 3)
    assert eta[2 * 3 + 1] == 1.0
    assert eta.sum() == 1.0


def test_constant_image_has_no_colour_statistics(rng):
    image = np.full((3, 4, 3), 0.6)
    eta = crf_features(SegObservation(image, np.zeros((3, 4), dtype=int)), rng.integers(0, 3, size=(3, 4)), 3)
    assert np.all(eta[45:] == 0.0)
    assert eta[9:45].sum() == GridGraph(3, 4).num_edges


def test_local_scores_are_energy_differences(rng):
    params, image, unary, labeling = _random_instance(rng, L=3)
    graph = GridGraph(3, 3)
    for site in (0, 4, 7):
        scores = local_scores(params, image.reshape(-1, 3), unary.ravel(), labeling.ravel(), graph, np.array([site]))[0]
        energies = []
        for label in range(3):
            y = labeling.ravel().copy()
            y[site] = label
            energies.append(grid_energy(params, image, unary, y.reshape(3, 3)))
        assert np.allclose(scores - scores[0], np.array(energies) - energies[0], atol=1e-9)


def test_gibbs_kernel_detailed_balance(tiny_crf_instance):
    params, image, unary = tiny_crf_instance
    exact = enumerate_grid(params, image, unary)
    pi = np.exp(exact.log_probs)
    for site in range(4):
        K = single_site_kernel(params, image, unary, site)
        assert np.allclose(K.sum(axis=1), 1.0)
        flow = pi[:, None] * K
        assert np.max(np.abs(flow - flow.T)) <= 1e-12


def test_gibbs_sweep_keeps_input_and_respects_labels(tiny_crf_instance):
    params, image, unary = tiny_crf_instance
    start = np.zeros((2, 2), dtype=int)
    out = crf_gibbs_sweep(params, image, unary, start, RngStream(0), sweeps=3)
    assert np.all(start == 0)
    assert out.shape == (2, 2)
    assert set(np.unique(out)) <= {0, 1}
    with pytest.raises(DimensionMismatchError):
        crf_gibbs_sweep(params, image, unary, np.zeros((3, 2), dtype=int), RngStream(0))


@pytest.mark.parametrize('scan', ['raster', 'blocked'])
def test_zero_pairwise_decode_follows_unary(rng, scan):
    L = 3
    params = SegCrfParams(6.0 * np.eye(L), np.zeros((4, L, L)), np.zeros((4, L, L)))
    unary = rng.integers(0, L, size=(5, 5))
    image = rng.uniform((5, 5, 3))
    decoded = max_marginal_decode(params, image, unary, RngStream(1), burn_in=5, samples=50, scan=scan)
    assert np.array_equal(decoded, unary)


@pytest.mark.slow
@pytest.mark.parametrize('scan', ['raster', 'blocked'])
def test_gibbs_marginals_match_enumeration(tiny_crf_instance, scan):
    params, image, unary = tiny_crf_instance
    exact = enumerate_grid(params, image, unary)
    freq = marginal_frequencies(params, image, unary, RngStream(5), burn_in=100, samples=50_000, scan=scan)
    assert np.max(np.abs(freq - exact.marginals)) <= 0.01


@pytest.mark.parametrize('scan', ['raster', 'blocked'])
def test_attractive_crf_samples_constant_labelings(scan):
    L = 3
    params = SegCrfParams(np.zeros((L, L)), np.tile(10.0 * np.eye(L), (4, 1, 1)), np.zeros((4, L, L)))
    image = np.full((2, 2, 3), 0.5)
    unary = np.zeros((2, 2), dtype=int)
    rng = RngStream(8)
    labeling = crf_gibbs_sweep(params, image, unary, rng.integers(0, L, size=(2, 2)), rng, sweeps=5, scan=scan)
    constant = 0
    for _ in range(500):
        labeling = crf_gibbs_sweep(params, image, unary, labeling, rng, scan=scan)
        constant += int(np.all(labeling == labeling[0, 0]))
    assert constant / 500 > 0.9


@pytest.mark.slow
def test_decode_matches_enumerated_argmax():
    L = 2
    params = SegCrfParams(2.0 * np.eye(L), np.tile(0.5 * np.eye(L), (4, 1, 1)), np.zeros((4, L, L)))
    image = RngStream(9).uniform((2, 2, 3))
    unary = np.array([[0, 1], [1, 0]])
    target = np.argmax(enumerate_grid(params, image, unary).marginals, axis=-1)
    hits = sum(
        np.array_equal(max_marginal_decode(params, image, unary, RngStream(seed), burn_in=20, samples=2000), target)
        for seed in range(100)
    )
    assert hits >= 99


def test_colour_params_validation(rng):
    assert GenColorParams.dimension(3, 8) == 3 * 8 + 3 * 8 + 2
    params = GenColorParams.initial(rng, 3, 4)
    again = GenColorParams.from_vector(params.to_vector(), 3, 4)
    assert np.array_equal(again.to_vector(), params.to_vector())
    with pytest.raises(ImproperDistributionError):
        GenColorParams(np.zeros((3, 4)), 0.0, np.zeros((4, 3)), -1.0)
    with pytest.raises(ImproperDistributionError):
        GenColorParams(np.zeros((3, 4)), -1.0, np.zeros((4, 3)), 0.5)


def test_colour_sampler_without_coupling_has_gaussian_moments():
    c = -50.0
    target = np.array([0.3, 0.5, 0.6])
    params = GenColorParams(np.zeros((2, 1)), c, (-2.0 * c * target)[None, :], 0.0)
    labeling = np.zeros((8, 8), dtype=int)
    rng = RngStream(2)
    image = rng.uniform((8, 8, 3))
    colours = np.zeros((8, 8), dtype=int)
    draws = []
    for _ in range(200):
        image, colours = color_gibbs_sweep(params, labeling, image, colours, rng)
        draws.append(image.reshape(-1, 3))
    draws = np.concatenate(draws)
    assert np.allclose(draws.mean(axis=0), target, atol=0.01)
    assert np.allclose(draws.var(axis=0), -0.5 / c, atol=0.002)


def test_colour_sweep_stays_in_unit_cube(rng):
    params = GenColorParams.initial(rng, 3, 4)
    labeling = rng.integers(0, 3, size=(6, 6))
    image, colours = color_gibbs_sweep(
        params, labeling, rng.uniform((6, 6, 3)), rng.integers(0, 4, size=(6, 6)), rng, sweeps=3, scan='blocked')
    assert image.shape == (6, 6, 3)
    assert image.min() >= 0.0 and image.max() <= 1.0
    assert colours.min() >= 0 and colours.max() < 4


def test_colour_features_layout(rng):
    L, G = 3, 4
    image = np.full((3, 3, 3), 0.5)
    labeling = rng.integers(0, L, size=(3, 3))
    colours = rng.integers(0, G, size=(3, 3))
    eta = color_features(image, labeling, colours, L, G)
    assert eta.size == GenColorParams.dimension(L, G)
    assert eta[:L * G].sum() == 9
    assert eta[L * G] == pytest.approx(9 * 3 * 0.25)
    assert eta[-1] == 0.0


def test_single_colour_number_expected_features_are_exact(rng):
    params = GenColorParams(np.zeros((3, 1)), -5.0, np.ones((1, 3)), -1.0)
    image = rng.uniform((4, 4, 3))
    labeling = rng.integers(0, 3, size=(4, 4))
    exact = color_features(image, labeling, np.zeros((4, 4), dtype=int), 3, 1)
    assert np.allclose(expected_color_features(params, image, labeling), exact)


def test_colour_likelihood_projection_and_observe(rng):
    model = ColorLikelihood(GenColorParams.initial(rng, 3, 4).to_vector(), 3, 4)
    theta = model.params.copy()
    theta[3 * 4] = 0.5
    theta[-1] = 2.0
    projected, changed = model.project(theta)
    assert changed
    assert projected[3 * 4] <= -1e-3 and projected[-1] == 0.0
    with pytest.raises(ValueError):
        model.observe(np.zeros((2, 2, 3)))


def test_seg_features_dispatch(rng):
    obs = SegObservation(rng.uniform((3, 3, 3)), rng.integers(0, 3, size=(3, 3)))
    y = rng.integers(0, 3, size=(3, 3))
    g = rng.integers(0, 8, size=(3, 3))
    assert seg_features('posterior', obs, y).size == 81
    assert seg_features('likelihood', obs, y, g).size == GenColorParams.dimension(3, 8)
    with pytest.raises(ValueError):
        seg_features('likelihood', obs, y)
    with pytest.raises(ValueError):
        seg_features('prior', obs, y, g)


def test_pixel_features():
    image = np.full((4, 5, 3), 0.25)
    feats = pixel_features(image)
    assert feats.shape == (20, 9)
    assert np.allclose(feats[:, 6:], 0.0)
    with pytest.raises(DimensionMismatchError):
        pixel_features(np.zeros((4, 5)))


def _flat_colour_images(corpus):
    palette = np.array([[0.9, 0.1, 0.1], [0.1, 0.9, 0.1], [0.1, 0.1, 0.9]])
    return [palette[ex.labels] for ex in corpus], [ex.labels for ex in corpus]


def test_unary_forest_separates_constant_colours(small_corpus, tmp_path):
    images, labelings = _flat_colour_images(small_corpus)
    predictor = unary_train(images, labelings, 3, n_trees=8, max_depth=10, seed=0)
    assert predictor.accuracy(images, labelings) == 1.0
    path = tmp_path / 'forest.joblib'
    predictor.save(path)
    loaded = UnaryPredictor.load(path)
    assert np.array_equal(loaded(images[0]), unary_predict(predictor, images[0]))
    assert np.array_equal(unary_predict(predictor, images[1]), labelings[1])


def test_unary_train_rejects_bad_input(small_corpus):
    with pytest.raises(ValueError):
        unary_train([], [])
    with pytest.raises(DimensionMismatchError):
        unary_train([small_corpus[0].image], [np.zeros((3, 3), dtype=int)])


def test_synthetic_corpus(small_corpus):
    assert len(small_corpus) == 12
    ex = small_corpus[0]
    assert ex.image.shape == (8, 8, 3) and ex.labels.shape == (8, 8)
    assert ex.image.min() >= 0.0 and ex.image.max() <= 1.0
    assert ex.labels.min() >= 0 and ex.labels.max() < 3
    again = synthetic_corpus(12, CorpusConfig(image_size=8), RngStream(3))
    assert all(np.array_equal(a.image, b.image) for a, b in zip(small_corpus, again))


def test_dataset_prefers_precomputed_unary(small_corpus):
    precomputed = np.ones((8, 8), dtype=int)
    examples = [SegExample('a', small_corpus[0].image, small_corpus[0].labels, precomputed), small_corpus[1]]
    data = SegDataset.from_examples(examples, lambda image: np.zeros(image.shape[:2], dtype=int))
    assert np.all(data.xs[0].unary == 1)
    assert np.all(data.xs[1].unary == 0)
    assert len(data) == 2


def test_load_corpus_rejects_empty_directory(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path)


def _warm_setup(small_corpus, chain_length=1):
    xs = [SegObservation(ex.image, ex.labels) for ex in small_corpus[:3]]
    rng = RngStream(8)
    buffer = WarmStartBuffer(xs, rng.child(0), 3, 4, chain_length)
    posterior = CrfPosterior(np.zeros(81), 3)
    likelihood = ColorLikelihood(
        GenColorParams.initial(rng.child(1), 3, 4).to_vector(), 3, 4,
        unary_fn=lambda image: np.zeros(image.shape[:2], dtype=int))
    return xs, buffer, posterior, likelihood


def test_warm_start_counts_sweeps_of_drawn_examples(small_corpus):
    xs, buffer, posterior, likelihood = _warm_setup(small_corpus)
    sampler = WarmStartSampler(buffer, sweeps_per_update=2)
    draw = sampler.draw(posterior, likelihood, [xs[1]], [1], RngStream(9))
    assert buffer.sweep_counts() == [0, 2, 0]
    assert draw.length == 1
    assert draw.labels[0][0].shape == (8, 8)
    assert isinstance(draw.observations[1][0], SegObservation)
    sampler.negative_stats(posterior, [xs[0], xs[1]], [0, 1], RngStream(10))
    assert buffer.sweep_counts() == [2, 4, 0]


def test_warm_start_chain_length_must_match(small_corpus):
    xs, buffer, posterior, likelihood = _warm_setup(small_corpus, chain_length=1)
    with pytest.raises(ConfigError):
        WarmStartSampler(buffer).draw(posterior, likelihood, [xs[0]], [0], RngStream(0), chain_length=2)


def test_cold_chains_restart_but_keep_counts(small_corpus):
    xs, buffer, posterior, likelihood = _warm_setup(small_corpus, chain_length=2)
    sampler = WarmStartSampler(buffer, warm_start=False)
    before = buffer[0]
    draw = sampler.draw(posterior, likelihood, [xs[0]], [0], RngStream(1), chain_length=2)
    assert buffer[0] is not before
    assert buffer.sweep_counts()[0] == 1
    assert draw.length == 2
