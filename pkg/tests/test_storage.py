"""Tests for parameter archives, results files, images and corpus listing."""
import math

import numpy as np
import pytest
from PIL import Image

from weakimplicit.core.constants import ARCHIVE_MAGIC, RESULTS_HEADER
from weakimplicit.core.exceptions import ArchiveFormatError, CorpusError
from weakimplicit.core.models import ExperimentRecord
from weakimplicit.core.prob import RngStream
from weakimplicit.data import CORPUS_ENV, get_corpus_dir, has_corpus, list_corpus
from weakimplicit.models.segmentation import load_corpus
from weakimplicit.models.segmentation.color import GenColorParams
from weakimplicit.models.segmentation.crf import SegCrfParams
from weakimplicit.models.synthetic import ClassGaussParams, QuadLogRegParams
from weakimplicit.storage import (
    label_map_to_rgb,
    load_params,
    read_image,
    read_label_map,
    read_records,
    save_params,
    write_image,
    write_label_map,
    write_records,
    write_strip,
)
from weakimplicit.storage.params import format_archive, parse_archive, register_kind


def _param_sets():
    r = RngStream(17)
    return [
        QuadLogRegParams.from_vector(r.normal(size=9)),
        ClassGaussParams.from_moments(r.normal(size=3), r.uniform(3) + 0.1),
        ClassGaussParams(np.full(3, -0.7), r.normal(size=3), shared_d=True),
        SegCrfParams.from_vector(r.normal(size=81), 3),
        GenColorParams.initial(r, 3, 5),
    ]


@pytest.mark.parametrize('params', _param_sets(), ids=lambda p: p.KIND)
def test_params_round_trip_is_exact(tmp_path, params):
    path = tmp_path / 'model.params'
    save_params(path, params)
    loaded = load_params(path)
    assert type(loaded) is type(params)
    assert np.array_equal(loaded.to_vector(), params.to_vector())


def test_shared_variance_flag_survives(tmp_path):
    params = ClassGaussParams(np.full(3, -0.7), np.zeros(3), shared_d=True)
    save_params(tmp_path / 'g.params', params)
    assert load_params(tmp_path / 'g.params').shared_d


def test_raw_vectors(tmp_path):
    theta = np.array([1.0 / 3.0, -2.5e-300, 7.0])
    save_params(tmp_path / 'v.params', theta)
    assert np.array_equal(load_params(tmp_path / 'v.params'), theta)
    save_params(tmp_path / 'empty.params', np.array([]))
    assert load_params(tmp_path / 'empty.params').size == 0


def test_archive_header():
    text = format_archive(SegCrfParams.zeros(2))
    assert text.splitlines()[0] == f'{ARCHIVE_MAGIC} 1 kind=seg-crf labels=2 edge_types=4'
    kind, dims, blocks = parse_archive(text)
    assert kind == 'seg-crf'
    assert dims == {'labels': 2, 'edge_types': 4}
    assert list(blocks)[:2] == ['q', 'a.horizontal']


@pytest.mark.parametrize('text', [
    '',
    'something else 1 kind=vector size=0\n',
    f'{ARCHIVE_MAGIC} 2 kind=vector size=0\n',
    f'{ARCHIVE_MAGIC} 1 size=0\n',
    f'{ARCHIVE_MAGIC} 1 kind=vector size=2\n[theta] 2\n1.0\n',
    f'{ARCHIVE_MAGIC} 1 kind=vector size=1\ntheta 1\n1.0\n',
    f'{ARCHIVE_MAGIC} 1 kind=vector size=1\n[theta] 1\nabc\n',
    f'{ARCHIVE_MAGIC} 1 kind=mystery n=1\n[x] 1\n1.0\n',
    f'{ARCHIVE_MAGIC} 1 kind=qlr classes=3\n[a] 3\n0 0 0\n',
])
def test_malformed_archives_rejected(tmp_path, text):
    path = tmp_path / 'bad.params'
    path.write_text(text, encoding='utf-8')
    with pytest.raises(ArchiveFormatError):
        load_params(path)


def test_missing_archive(tmp_path):
    with pytest.raises(ArchiveFormatError):
        load_params(tmp_path / 'absent.params')


def test_unarchivable_type(tmp_path):
    with pytest.raises(ArchiveFormatError):
        save_params(tmp_path / 'x.params', object())


class _Offsets:
    KIND = 'test-offsets'

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def to_blocks(self):
        return {'dims': {'n': self.values.size}, 'blocks': {'values': self.values}}

    @classmethod
    def from_blocks(cls, dims, blocks):
        return cls(blocks['values'])


def test_registered_kind_round_trips(tmp_path):
    register_kind(_Offsets)
    save_params(tmp_path / 'o.params', _Offsets([0.5, 1.5]))
    assert np.array_equal(load_params(tmp_path / 'o.params').values, [0.5, 1.5])


def _records():
    return [
        ExperimentRecord.create('synthetic', 'IM', 10, 0, 0.3, 1.0 / 3.0, 42, 0.25),
        ExperimentRecord.create('synthetic', 'CL weak', 20, 1, 0.1, 0.45, 43),
        ExperimentRecord.create('synthetic', 'RF', 20, 1, math.nan, 0.5, 44),
    ]


def test_records_round_trip(tmp_path):
    path = tmp_path / 'results.csv'
    records = _records()
    write_records(path, records)
    loaded = read_records(path)
    assert loaded[:2] == records[:2]
    assert math.isnan(loaded[2].train_error) and math.isnan(loaded[2].risk_diff)
    first = path.read_text(encoding='utf-8').splitlines()[0]
    assert first == ','.join(RESULTS_HEADER)


def test_records_reject_wrong_header(tmp_path):
    path = tmp_path / 'results.csv'
    path.write_text('a,b,c\n', encoding='utf-8')
    with pytest.raises(ArchiveFormatError):
        read_records(path)


def test_records_reject_inconsistent_risk_diff(tmp_path):
    path = tmp_path / 'results.csv'
    write_records(path, _records()[:1])
    lines = path.read_text(encoding='utf-8').splitlines()
    cells = lines[1].split(',')
    cells[RESULTS_HEADER.index('risk_diff')] = '0.5'
    path.write_text('\n'.join([lines[0], ','.join(cells)]) + '\n', encoding='utf-8')
    with pytest.raises(ArchiveFormatError):
        read_records(path)


def test_label_map_round_trip(tmp_path, rng):
    labels = rng.integers(0, 5, size=(6, 7))
    write_label_map(tmp_path / 'l.png', labels)
    assert np.array_equal(read_label_map(tmp_path / 'l.png'), labels)


def test_image_round_trip(tmp_path, rng):
    image = rng.uniform((5, 4, 3))
    write_image(tmp_path / 'i.png', image)
    assert np.max(np.abs(read_image(tmp_path / 'i.png') - image)) <= 0.5 / 255.0 + 1e-12


def test_rgb_label_map_rejected(tmp_path):
    Image.fromarray(np.zeros((3, 3, 3), dtype=np.uint8)).save(tmp_path / 'rgb.png')
    with pytest.raises(CorpusError):
        read_label_map(tmp_path / 'rgb.png')


def test_strip_layout(tmp_path):
    panels = [np.zeros((4, 5, 3)), label_map_to_rgb(np.ones((4, 5), dtype=int))]
    write_strip(tmp_path / 's.png', panels, scale=2, gap=1)
    assert read_image(tmp_path / 's.png').shape == (8, 21, 3)
    with pytest.raises(ValueError):
        write_strip(tmp_path / 'bad.png', [np.zeros((4, 5, 3)), np.zeros((3, 5, 3))])
    with pytest.raises(ValueError):
        write_strip(tmp_path / 'empty.png', [])


def _write_corpus(root, rng, names=('b', 'a'), unary_for=('a',)):
    for sub in ('images', 'labels', 'unary'):
        (root / sub).mkdir()
    for name in names:
        write_image(root / 'images' / f'{name}.png', rng.uniform((4, 4, 3)))
        write_label_map(root / 'labels' / f'{name}.png', rng.integers(0, 3, size=(4, 4)))
    for name in unary_for:
        write_label_map(root / 'unary' / f'{name}.png', rng.integers(0, 3, size=(4, 4)))
    write_image(root / 'images' / 'orphan.png', rng.uniform((4, 4, 3)))


def test_list_corpus(tmp_path, rng):
    _write_corpus(tmp_path, rng)
    assert has_corpus(tmp_path)
    entries = list_corpus(tmp_path)
    assert [e.name for e in entries] == ['a', 'b']
    assert entries[0].unary_path is not None and entries[1].unary_path is None


def test_corpus_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(CORPUS_ENV, str(tmp_path))
    assert get_corpus_dir() == tmp_path
    assert get_corpus_dir(tmp_path / 'other') == tmp_path / 'other'
    monkeypatch.delenv(CORPUS_ENV)
    assert get_corpus_dir() is None
    assert list_corpus() == []


def test_load_corpus(tmp_path, rng):
    _write_corpus(tmp_path, rng)
    examples = load_corpus(tmp_path)
    assert [ex.name for ex in examples] == ['a', 'b']
    assert examples[0].unary is not None and examples[1].unary is None
    assert examples[0].image.shape == (4, 4, 3)
    assert len(load_corpus(tmp_path, limit=1)) == 1


def test_load_corpus_rejects_size_mismatch(tmp_path, rng):
    _write_corpus(tmp_path, rng, names=('a',), unary_for=())
    write_label_map(tmp_path / 'labels' / 'a.png', np.zeros((3, 4), dtype=int))
    with pytest.raises(CorpusError):
        load_corpus(tmp_path)
