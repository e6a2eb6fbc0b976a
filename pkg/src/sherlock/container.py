"""Unified on-disk model container.

Layout: 8 magic bytes, uint32 format version, a length-prefixed JSON
metadata blob (model type, schema hash, type list, hyperparameters, seeds,
section directory, and any non-numeric payload such as vocabularies or
dictionaries), then one length-prefixed little-endian float64 section per
named array. Integer arrays are stored as float64 (exact below 2^53).

The feature-schema hash is verified at load time.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .features.paragraph import ParagraphVectorModel, PVHyperparams
from .match import DictionaryModel, RegexRuleSet
from .nn import IsolatedNet, SherlockNet, TrainingConfig, _MLP
from .pipeline import SCHEMA, Imputer
from .semtypes import SEMANTIC_TYPES
from .trees import DecisionTree, RandomForest

MAGIC = b"SHERLCK1"
VERSION = 1

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def _write_section(fh, arr: np.ndarray) -> None:
    data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
    fh.write(_U64.pack(len(data)))
    fh.write(data)


def _read_section(fh, shape) -> np.ndarray:
    (length,) = _U64.unpack(fh.read(8))
    data = fh.read(length)
    if len(data) != length:
        raise DataError("truncated container section")
    return np.frombuffer(data, dtype="<f8").reshape(shape).astype(np.float64)


def save_container(path: str | Path, model_type: str, meta: dict,
                   arrays: dict[str, np.ndarray]) -> None:
    meta = dict(meta)
    meta["model_type"] = model_type
    meta["schema_hash"] = SCHEMA.sha256()
    meta["types"] = list(SEMANTIC_TYPES)
    meta["sections"] = [[name, list(np.asarray(a).shape)] for name, a in arrays.items()]
    blob = json.dumps(meta, ensure_ascii=False).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(VERSION))
        fh.write(_U64.pack(len(blob)))
        fh.write(blob)
        for arr in arrays.values():
            _write_section(fh, np.asarray(arr))


def load_container(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    with path.open("rb") as fh:
        if fh.read(8) != MAGIC:
            raise DataError(f"{path}: not a model container (bad magic)")
        (version,) = _U32.unpack(fh.read(4))
        if version != VERSION:
            raise DataError(f"{path}: unsupported container version {version}")
        (mlen,) = _U64.unpack(fh.read(8))
        meta = json.loads(fh.read(mlen).decode("utf-8"))
        if meta.get("schema_hash") != SCHEMA.sha256():
            raise DataError(f"{path}: feature schema hash mismatch")
        arrays = {}
        for name, shape in meta["sections"]:
            arrays[name] = _read_section(fh, tuple(int(s) for s in shape))
    return meta, arrays


# --- per-model packing -----------------------------------------------------

def _pack_mlp(prefix: str, mlp: _MLP, arrays: dict) -> None:
    for i, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        arrays[f"{prefix}_W{i}"] = W
        arrays[f"{prefix}_b{i}"] = b


def _unpack_mlp(prefix: str, mlp: _MLP, arrays: dict) -> None:
    for i in range(len(mlp.weights)):
        mlp.weights[i] = arrays[f"{prefix}_W{i}"].copy()
        mlp.biases[i] = arrays[f"{prefix}_b{i}"].copy()


def _pack_pv(pv: ParagraphVectorModel, meta: dict, arrays: dict) -> None:
    meta["pv_hyperparams"] = dataclasses.asdict(pv.hyperparams)
    meta["pv_vocab"] = sorted(pv.vocab, key=pv.vocab.get)
    meta["pv_epoch_losses"] = pv.epoch_losses
    arrays["pv_token_weights"] = pv.token_weights
    arrays["pv_paragraph_vectors"] = pv.paragraph_vectors
    arrays["pv_noise_cdf"] = pv.noise_cdf


def _unpack_pv(meta: dict, arrays: dict) -> ParagraphVectorModel:
    hp = PVHyperparams(**meta["pv_hyperparams"])
    vocab = {tok: i for i, tok in enumerate(meta["pv_vocab"])}
    return ParagraphVectorModel(hp, vocab, arrays["pv_token_weights"].copy(),
                                arrays["pv_paragraph_vectors"].copy(),
                                arrays["pv_noise_cdf"].copy(),
                                list(meta["pv_epoch_losses"]))


def _pack_tree(prefix: str, tree: DecisionTree, meta: dict, arrays: dict) -> None:
    meta[f"{prefix}_max_depth"] = tree.max_depth
    meta[f"{prefix}_n_features"] = tree.n_features
    arrays[f"{prefix}_feature"] = tree.feature
    arrays[f"{prefix}_threshold"] = tree.threshold
    arrays[f"{prefix}_left"] = tree.left
    arrays[f"{prefix}_right"] = tree.right
    arrays[f"{prefix}_counts"] = tree.counts
    arrays[f"{prefix}_importances"] = tree.raw_importances


def _unpack_tree(prefix: str, meta: dict, arrays: dict) -> DecisionTree:
    return DecisionTree(
        feature=arrays[f"{prefix}_feature"].astype(np.int64),
        threshold=arrays[f"{prefix}_threshold"].copy(),
        left=arrays[f"{prefix}_left"].astype(np.int64),
        right=arrays[f"{prefix}_right"].astype(np.int64),
        counts=arrays[f"{prefix}_counts"].copy(),
        raw_importances=arrays[f"{prefix}_importances"].copy(),
        max_depth=int(meta[f"{prefix}_max_depth"]),
        n_features=int(meta[f"{prefix}_n_features"]),
    )


class ModelBundle:
    """A trained model plus the fitted preprocessing state it needs at
    prediction time (imputer means and, when available, the paragraph-vector
    model so raw columns can be featurized)."""

    def __init__(self, model_type: str, model, imputer: Imputer | None = None,
                 pv: ParagraphVectorModel | None = None, meta: dict | None = None):
        self.model_type = model_type
        self.model = model
        self.imputer = imputer
        self.pv = pv
        self.meta = meta or {}

    def save(self, path: str | Path) -> None:
        meta: dict = dict(self.meta)
        arrays: dict[str, np.ndarray] = {}
        mt = self.model_type
        if mt == "nn":
            net: SherlockNet = self.model
            meta["training_config"] = dataclasses.asdict(net.config)
            for name, mlp in zip(("chars", "words", "paragraph", "primary"),
                                 net._mlps()):
                _pack_mlp(name, mlp, arrays)
        elif mt == "nn_isolated":
            net = self.model
            meta["training_config"] = dataclasses.asdict(net.config)
            meta["family"] = net.family
            _pack_mlp("isolated", net.net, arrays)
        elif mt == "tree":
            _pack_tree("tree", self.model, meta, arrays)
        elif mt == "forest":
            forest: RandomForest = self.model
            meta["n_trees"] = len(forest.trees)
            meta["forest_seed"] = forest.seed
            for i, tree in enumerate(forest.trees):
                _pack_tree(f"tree{i}", tree, meta, arrays)
        elif mt == "dictionary":
            meta["dictionary"] = json.loads(self.model.to_json())
        elif mt == "regex":
            meta["rules"] = json.loads(self.model.to_json())
        else:
            raise DataError(f"unknown model type {mt!r}")
        if self.imputer is not None:
            arrays["imputer_means"] = self.imputer.means
        if self.pv is not None:
            _pack_pv(self.pv, meta, arrays)
        save_container(path, mt, meta, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "ModelBundle":
        meta, arrays = load_container(path)
        mt = meta["model_type"]
        model = None
        if mt == "nn":
            config = TrainingConfig(**{
                k: tuple(v) if isinstance(v, list) else v
                for k, v in meta["training_config"].items()})
            net = SherlockNet(config)
            for name, mlp in zip(("chars", "words", "paragraph", "primary"),
                                 net._mlps()):
                _unpack_mlp(name, mlp, arrays)
            model = net
        elif mt == "nn_isolated":
            config = TrainingConfig(**{
                k: tuple(v) if isinstance(v, list) else v
                for k, v in meta["training_config"].items()})
            net = IsolatedNet(meta["family"], config)
            _unpack_mlp("isolated", net.net, arrays)
            model = net
        elif mt == "tree":
            model = _unpack_tree("tree", meta, arrays)
        elif mt == "forest":
            trees = [_unpack_tree(f"tree{i}", meta, arrays)
                     for i in range(int(meta["n_trees"]))]
            model = RandomForest(trees=trees, seed=int(meta.get("forest_seed", 0)))
        elif mt == "dictionary":
            model = DictionaryModel.from_json(json.dumps(meta["dictionary"]))
        elif mt == "regex":
            model = RegexRuleSet.from_json(json.dumps(meta["rules"]))
        else:
            raise DataError(f"unknown model type {mt!r}")
        imputer = None
        if "imputer_means" in arrays:
            imputer = Imputer(arrays["imputer_means"].copy())
        pv = _unpack_pv(meta, arrays) if "pv_vocab" in meta else None
        return cls(mt, model, imputer, pv, meta)
