#!/usr/bin/env python3
"""
Prepare an image corpus directory for the segmentation study.

This script draws a synthetic corpus and writes it in the layout that
``weakimplicit segment sweep --corpus DIR`` reads:

    DIR/images/<name>.png    RGB image
    DIR/labels/<name>.png    label map (one grey level per label)
    DIR/unary/<name>.png     optional precomputed unary map

Usage:
    python scripts/prepare_corpus.py --output-dir data/corpus --count 100
    python scripts/prepare_corpus.py --output-dir data/corpus --count 100 --unary 20
"""

import argparse
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from weakimplicit.core.exceptions import ImplicitModelError
from weakimplicit.core.prob import RngStream
from weakimplicit.data import IMAGES_SUBDIR, LABELS_SUBDIR, UNARY_SUBDIR, list_corpus
from weakimplicit.models.segmentation import CorpusConfig, synthetic_corpus, unary_train
from weakimplicit.storage.images import write_image, write_label_map


def prepare_corpus(data_dir: Path, count: int, config: CorpusConfig, seed: int, unary_count: int = 0):
    """
    Write a synthetic corpus to a directory.

    Args:
        data_dir: Corpus root; subdirectories are created as needed
        count: Number of images
        config: Image size, labels and colour noise
        seed: Corpus seed
        unary_count: Train a pixel forest on this many images and write
            its label maps for every image (0: no unary maps)
    """
    print(f"\n{'='*70}")
    print(f"Preparing {count} synthetic images ({config.image_size}x{config.image_size}, "
          f"{config.num_labels} labels)")
    print(f"{'='*70}\n")

    print("Step 1: Drawing images and label maps...")
    examples = synthetic_corpus(count, config, RngStream(seed))

    print("Step 2: Writing images and label maps...")
    for sub in (IMAGES_SUBDIR, LABELS_SUBDIR):
        (data_dir / sub).mkdir(parents=True, exist_ok=True)
    for example in examples:
        write_image(data_dir / IMAGES_SUBDIR / f'{example.name}.png', example.image)
        write_label_map(data_dir / LABELS_SUBDIR / f'{example.name}.png', example.labels)

    if unary_count > 0:
        print(f"\nStep 3: Training pixel forest on {unary_count} images...")
        subset = examples[:unary_count]
        forest = unary_train(
            [ex.image for ex in subset],
            [ex.labels for ex in subset],
            num_labels=config.num_labels,
            seed=seed,
        )
        (data_dir / UNARY_SUBDIR).mkdir(parents=True, exist_ok=True)
        for example in examples:
            write_label_map(data_dir / UNARY_SUBDIR / f'{example.name}.png', forest(example.image))

    entries = list_corpus(data_dir)
    with_unary = sum(1 for e in entries if e.unary_path is not None)
    print("\nVerifying corpus...")
    print(f"  ✓ Image/label pairs: {len(entries):,}")
    print(f"  ✓ Unary maps: {with_unary:,}")


def main():
    parser = argparse.ArgumentParser(
        description="Prepare a synthetic image corpus for the segmentation study"
    )
    parser.add_argument(
        '--output-dir',
        type=str,
        required=True,
        help='Corpus directory to create'
    )
    parser.add_argument('--count', type=int, default=100, help='Number of images (default: 100)')
    parser.add_argument('--size', type=int, default=CorpusConfig.image_size, help='Image side in pixels')
    parser.add_argument('--labels', type=int, default=CorpusConfig.num_labels, help='Number of labels')
    parser.add_argument('--noise', type=float, default=CorpusConfig.noise, help='Per-pixel colour noise')
    parser.add_argument('--seed', type=int, default=0, help='Corpus seed')
    parser.add_argument(
        '--unary',
        type=int,
        default=0,
        metavar='N',
        help='Also write forest unary maps, trained on the first N images'
    )

    args = parser.parse_args()

    if args.count < 1:
        print("Error: --count must be at least 1")
        sys.exit(1)
    if args.unary > args.count:
        print("Error: --unary cannot exceed --count")
        sys.exit(1)

    data_dir = Path(args.output_dir)
    print(f"Corpus will be saved to: {data_dir}")

    try:
        config = CorpusConfig(image_size=args.size, num_labels=args.labels, noise=args.noise)
        prepare_corpus(data_dir, args.count, config, args.seed, args.unary)
    except (ImplicitModelError, ValueError, OSError) as e:
        print(f"\n✗ Failed to prepare corpus: {e}")
        sys.exit(1)

    print(f"\n✓ Corpus ready in {data_dir}")
    print("\nNext steps:")
    print(f"  weakimplicit segment sweep --corpus {data_dir}")


if __name__ == '__main__':
    main()
