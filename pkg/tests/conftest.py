"""Shared fixtures: tiny embedding tables and synthetic evaluation runs."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from capeval import EmbeddingTable, Sentence
from capeval.pipeline import train_projector_files
from capeval.visual import save_projector

DATA_DIR = Path(__file__).parent / "data"


def sent(tokens, language="target"):
    if isinstance(tokens, str):
        tokens = tuple(tokens)
    return Sentence(tuple(tokens), language)


def table_from(entries, language="target"):
    entries = {t: np.asarray(v, dtype=float) for t, v in entries.items()}
    dim = len(next(iter(entries.values())))
    return EmbeddingTable(dim=dim, language=language, entries=entries)


@pytest.fixture
def plane_table():
    return table_from(
        {
            "a": (0.0, 0.0),
            "b": (3.0, 4.0),
            "c": (2.0, 0.0),
            "d": (1.0, 0.0),
        }
    )


@pytest.fixture
def eight_model_scores_csv():
    return DATA_DIR / "eight_model_scores.csv"


def write_vector_file(path: Path, entries: dict[str, np.ndarray], dim: int) -> Path:
    lines = [f"{len(entries)} {dim}"]
    for key, vec in entries.items():
        lines.append(key + " " + " ".join(repr(float(x)) for x in vec))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_jsonl(path: Path, rows) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


def make_synthetic_run(
    root: Path,
    n_images: int = 50,
    n_models: int = 3,
    seed: int = 0,
    candidates_equal_mt: bool = False,
) -> dict[str, Path]:
    """Build a complete synthetic evaluation fixture under ``root``.

    Embeddings, visual features, references (source/target/mt), one caption
    per (model, image), plus trained projectors for both languages.
    """
    rng = np.random.default_rng(seed)
    d_src, d_tgt, d_vis = 5, 6, 8
    src_vocab = [f"en{i}" for i in range(30)]
    tgt_vocab = [f"zh{i}" for i in range(30)]
    src_entries = {t: rng.normal(size=d_src) for t in src_vocab}
    tgt_entries = {t: rng.normal(size=d_tgt) for t in tgt_vocab}
    paths = {
        "embeddings_source": write_vector_file(root / "emb_src.txt", src_entries, d_src),
        "embeddings_target": write_vector_file(root / "emb_tgt.txt", tgt_entries, d_tgt),
    }

    images = [f"img{i:03d}" for i in range(n_images)]
    feature_entries = {img: rng.normal(size=d_vis) for img in images}
    paths["features"] = write_vector_file(root / "features.txt", feature_entries, d_vis)

    def sentence(vocab, low=4, high=9):
        k = int(rng.integers(low, high))
        return " ".join(str(w) for w in rng.choice(vocab, size=k))

    reference_rows = []
    mt_by_image = {}
    for img in images:
        mt = sentence(tgt_vocab)
        mt_by_image[img] = mt
        reference_rows.append(
            {
                "image_id": img,
                "source": [sentence(src_vocab), sentence(src_vocab)],
                "target": [sentence(tgt_vocab), sentence(tgt_vocab)],
                "mt": [mt],
            }
        )
    paths["references"] = write_jsonl(root / "references.jsonl", reference_rows)

    models = [f"model{j}" for j in range(n_models)]
    caption_rows = []
    for model_id in models:
        for img in images:
            caption = mt_by_image[img] if candidates_equal_mt else sentence(tgt_vocab)
            caption_rows.append({"image_id": img, "model_id": model_id, "caption": caption})
    paths["captions"] = write_jsonl(root / "captions.jsonl", caption_rows)

    src_pairs = [
        {"image_id": row["image_id"], "caption": row["source"][0]} for row in reference_rows
    ]
    tgt_pairs = [
        {"image_id": row["image_id"], "caption": row["mt"][0], "origin": "mt"}
        for row in reference_rows
    ] + [
        {"image_id": row["image_id"], "caption": row["target"][0], "origin": "human"}
        for row in reference_rows
    ]
    paths["pairs_source"] = write_jsonl(root / "pairs_src.jsonl", src_pairs)
    paths["pairs_target"] = write_jsonl(root / "pairs_tgt.jsonl", tgt_pairs)

    proj_src = train_projector_files(
        paths["pairs_source"], paths["embeddings_source"], paths["features"], "source"
    )
    proj_tgt = train_projector_files(
        paths["pairs_target"], paths["embeddings_target"], paths["features"], "target"
    )
    paths["projector_source"] = root / "proj_src.txt"
    paths["projector_target"] = root / "proj_tgt.txt"
    save_projector(proj_src, paths["projector_source"])
    save_projector(proj_tgt, paths["projector_target"])
    return paths
