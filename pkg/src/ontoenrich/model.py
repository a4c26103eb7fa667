"""Relation classifier over dependency paths.

Node embeddings concatenate a frozen distributional word vector with
trainable POS, dependency and direction tag embeddings. A two-layer
bidirectional LSTM encodes each path; the top layer's forward and
backward final states form the path representation. Path representations
pool into a count-weighted context vector, which is concatenated with the
two term embeddings and classified by a feedforward-ReLU-feedforward head
with a log-softmax output. Everything runs in float64 and is deterministic
for a fixed seed.
"""

from __future__ import annotations

import base64
import json
import logging
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np
import torch
from torch import nn

from .dataset import TermPair
from .embeddings import EmbeddingProvider
from .errors import ModelError
from .labels import NUM_CLASSES, LabelKind
from .paths import DependencyNode, Direction, PairPaths

logger = logging.getLogger(__name__)

MODEL_FORMAT = "ontoenrich-model"
MODEL_VERSION = 1


@dataclass
class Hyperparams:
    hidden_dim: int = 180
    ffn_input_dim: int = 120
    num_layers: int = 2
    embedding_dropout: float = 0.35
    hidden_dropout: float = 0.8
    epochs: int = 200
    learning_rate: float = 0.001
    weight_decay: float = 0.001
    seed: int = 0
    pos_dim: int = 8
    dep_dim: int = 8
    dir_dim: int = 4
    normalize_context: bool = True

    def __post_init__(self):
        for name in ("hidden_dim", "ffn_input_dim", "num_layers", "pos_dim", "dep_dim", "dir_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("embedding_dropout", "hidden_dropout"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {value}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class TagVocabs:
    """POS/dep/dir vocabularies; id 0 is the UNK row of each table."""

    pos: list[str] = field(default_factory=list)
    dep: list[str] = field(default_factory=list)
    dir: list[str] = field(
        default_factory=lambda: [d.symbol for d in Direction]
    )

    def __post_init__(self):
        self._pos_ids = {t: i + 1 for i, t in enumerate(self.pos)}
        self._dep_ids = {t: i + 1 for i, t in enumerate(self.dep)}
        self._dir_ids = {t: i + 1 for i, t in enumerate(self.dir)}

    def pos_id(self, tag: str) -> int:
        return self._pos_ids.get(tag, 0)

    def dep_id(self, tag: str) -> int:
        return self._dep_ids.get(tag, 0)

    def dir_id(self, symbol: str) -> int:
        return self._dir_ids.get(symbol, 0)


def build_tag_vocabs(pair_paths: Iterable[PairPaths]) -> TagVocabs:
    pos: set[str] = set()
    dep: set[str] = set()
    for pp in pair_paths:
        for path in pp.paths:
            for node in path.nodes:
                pos.add(node.pos)
                dep.add(node.dep)
    return TagVocabs(pos=sorted(pos), dep=sorted(dep))


@dataclass
class ClassProbs:
    log_probs: np.ndarray
    predicted: LabelKind
    confidence: float


class PathClassifier(nn.Module):
    """The path encoder + classification head. Construct via init_model."""

    def __init__(self, h: Hyperparams, provider: EmbeddingProvider, vocabs: TagVocabs):
        super().__init__()
        if not vocabs.pos or not vocabs.dep:
            raise ModelError("tag vocabularies must be nonempty")
        self.h = h
        self.provider = provider
        self.vocabs = vocabs
        self.word_dim = provider.dimension

        self.pos_emb = nn.Embedding(len(vocabs.pos) + 1, h.pos_dim)
        self.dep_emb = nn.Embedding(len(vocabs.dep) + 1, h.dep_dim)
        self.dir_emb = nn.Embedding(len(vocabs.dir) + 1, h.dir_dim)
        node_dim = self.word_dim + h.pos_dim + h.dep_dim + h.dir_dim
        self.lstm = nn.LSTM(
            input_size=node_dim,
            hidden_size=h.hidden_dim,
            num_layers=h.num_layers,
            bidirectional=True,
            batch_first=True,
        )
        context_dim = 2 * h.hidden_dim
        self.ffn1 = nn.Linear(context_dim + 2 * self.word_dim, h.ffn_input_dim)
        self.ffn2 = nn.Linear(h.ffn_input_dim, NUM_CLASSES)
        self.embedding_dropout = nn.Dropout(h.embedding_dropout)
        self.hidden_dropout = nn.Dropout(h.hidden_dropout)
        self._word_cache: dict[str, torch.Tensor] = {}

    # -- embedding lookups ---------------------------------------------------

    def word_vector(self, text: str) -> torch.Tensor:
        vec = self._word_cache.get(text)
        if vec is None:
            vec = torch.as_tensor(self.provider.embed(text), dtype=torch.float64)
            if vec.shape != (self.word_dim,):
                raise ModelError(
                    f"provider returned shape {tuple(vec.shape)}, expected ({self.word_dim},)"
                )
            self._word_cache[text] = vec
        return vec

    def embed_node(self, node: DependencyNode) -> torch.Tensor:
        """Concatenated node embedding; dropout applies in training mode."""
        parts = [
            self.word_vector(node.lemma),
            self.pos_emb(torch.tensor(self.vocabs.pos_id(node.pos))),
            self.dep_emb(torch.tensor(self.vocabs.dep_id(node.dep))),
            self.dir_emb(torch.tensor(self.vocabs.dir_id(node.dir.symbol))),
        ]
        return self.embedding_dropout(torch.cat(parts))

    # -- path encoding and pooling --------------------------------------------

    def encode_path(self, nodes: tuple[DependencyNode, ...]) -> torch.Tensor:
        """Top layer's forward-final and backward-final states, concatenated."""
        sequence = torch.stack([self.embed_node(n) for n in nodes]).unsqueeze(0)
        _, (h_n, _) = self.lstm(sequence)
        return torch.cat([h_n[-2, 0], h_n[-1, 0]])

    def context_vector(self, pp: PairPaths) -> torch.Tensor:
        """Count-weighted pooling of the pair's path representations."""
        total = 0.0
        weighted = None
        for path in pp.paths:
            rep = path.count * self.encode_path(path.nodes)
            weighted = rep if weighted is None else weighted + rep
            total += path.count
        if self.h.normalize_context:
            weighted = weighted / total
        return weighted

    def forward(self, pp: PairPaths) -> torch.Tensor:
        """Log-probabilities over the five classes for one pair."""
        context = self.hidden_dropout(self.context_vector(pp))
        term_a = self.word_vector(pp.pair.a)
        term_b = self.word_vector(pp.pair.b)
        hidden = torch.relu(self.ffn1(torch.cat([context, term_a, term_b])))
        return torch.log_softmax(self.ffn2(hidden), dim=-1)


def init_model(
    h: Hyperparams, provider: EmbeddingProvider, vocabs: TagVocabs
) -> PathClassifier:
    """Seeded construction with Xavier-initialized weights, in float64."""
    torch.manual_seed(h.seed)
    model = PathClassifier(h, provider, vocabs).double()
    for name, param in model.named_parameters():
        if param.dim() >= 2:
            nn.init.xavier_uniform_(param)
        else:
            nn.init.zeros_(param)
    if not all(torch.isfinite(p).all() for p in model.parameters()):
        raise ModelError("non-finite parameter after initialization")
    return model


def classify_pair(
    pair: TermPair, pp: PairPaths, model: PathClassifier
) -> ClassProbs:
    """Eval-mode classification: a pure function of (pair, paths, params)."""
    if pp.pair.key != pair.key:
        pp = PairPaths(pair=pair, paths=pp.paths, is_null=pp.is_null)
    model.eval()
    with torch.no_grad():
        log_probs = model(pp).numpy()
    code = int(np.argmax(log_probs))
    return ClassProbs(
        log_probs=log_probs,
        predicted=LabelKind(code),
        confidence=float(np.exp(log_probs[code])),
    )


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_accuracies: list[float] = field(default_factory=list)

    @property
    def final_accuracy(self) -> float:
        return self.epoch_accuracies[-1] if self.epoch_accuracies else 0.0


def train(
    train_data: list[tuple[PairPaths, LabelKind]],
    h: Hyperparams,
    provider: EmbeddingProvider,
    vocabs: Optional[TagVocabs] = None,
) -> tuple[PathClassifier, TrainReport]:
    """Minimize NLL of the gold classes with AdamW, one pair per update.

    Pair order shuffles each epoch from the run seed. The report records
    the mean training loss per epoch and eval-mode training accuracy.
    """
    if not train_data:
        raise ValueError("train_data must be nonempty")
    if vocabs is None:
        vocabs = build_tag_vocabs(pp for pp, _ in train_data)
    torch.set_num_threads(1)
    model = init_model(h, provider, vocabs)
    report = TrainReport()
    if h.epochs == 0:
        return model, report

    optimizer = torch.optim.AdamW(
        model.parameters(), lr=h.learning_rate, weight_decay=h.weight_decay
    )
    loss_fn = nn.NLLLoss()
    rng = random.Random(h.seed)
    targets = [torch.tensor([label.code]) for _, label in train_data]

    for epoch in range(h.epochs):
        order = list(range(len(train_data)))
        rng.shuffle(order)
        model.train()
        losses = []
        for i in order:
            pp, _ = train_data[i]
            optimizer.zero_grad()
            log_probs = model(pp).unsqueeze(0)
            loss = loss_fn(log_probs, targets[i])
            if not torch.isfinite(loss):
                raise ModelError(
                    f"non-finite loss at epoch {epoch}, pair index {i}"
                )
            loss.backward()
            optimizer.step()
            losses.append(loss.item())

        model.eval()
        with torch.no_grad():
            correct = sum(
                1
                for (pp, label) in train_data
                if int(model(pp).argmax()) == label.code
            )
        report.epoch_losses.append(float(np.mean(losses)))
        report.epoch_accuracies.append(correct / len(train_data))
    return model, report


# ---------------------------------------------------------------------------
# Persistence: JSON container, tensors as base64 little-endian float64
# ---------------------------------------------------------------------------


def _encode_tensor(tensor: torch.Tensor) -> dict:
    array = tensor.detach().numpy().astype("<f8")
    return {
        "shape": list(array.shape),
        "data": base64.b64encode(array.tobytes()).decode("ascii"),
    }


def _decode_tensor(entry: dict) -> torch.Tensor:
    raw = base64.b64decode(entry["data"])
    array = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()
    return torch.from_numpy(array)


def save_model(model: PathClassifier, path: str) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "hyperparams": asdict(model.h),
        "word_dim": model.word_dim,
        "tag_vocabs": {
            "pos": model.vocabs.pos,
            "dep": model.vocabs.dep,
            "dir": model.vocabs.dir,
        },
        "tensors": {
            name: _encode_tensor(tensor)
            for name, tensor in model.state_dict().items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model(path: str, provider: EmbeddingProvider) -> PathClassifier:
    """Rebuild a model bitwise from its container; corrupt files never
    yield a partial model."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise ModelError(f"{path} is not a model file")
    if payload.get("version") != MODEL_VERSION:
        raise ModelError(
            f"model version {payload.get('version')} unsupported "
            f"(expected {MODEL_VERSION})"
        )
    if provider.dimension != payload["word_dim"]:
        raise ModelError(
            f"provider dimension {provider.dimension} does not match "
            f"saved word_dim {payload['word_dim']}"
        )
    h = Hyperparams(**payload["hyperparams"])
    vocabs = TagVocabs(**payload["tag_vocabs"])
    model = PathClassifier(h, provider, vocabs).double()
    try:
        state = {
            name: _decode_tensor(entry)
            for name, entry in payload["tensors"].items()
        }
        model.load_state_dict(state)
    except (KeyError, ValueError, RuntimeError) as exc:
        raise ModelError(f"corrupt model file {path}: {exc}") from exc
    return model


def parameter_groups(model: PathClassifier) -> dict[str, list[tuple[str, torch.Tensor]]]:
    """Named parameter groups for gradient verification."""
    groups: dict[str, list[tuple[str, torch.Tensor]]] = {
        "tag-embeddings": [],
        "recurrent": [],
        "ffn1": [],
        "ffn2": [],
    }
    for name, param in model.named_parameters():
        if name.startswith(("pos_emb", "dep_emb", "dir_emb")):
            groups["tag-embeddings"].append((name, param))
        elif name.startswith("lstm"):
            groups["recurrent"].append((name, param))
        elif name.startswith("ffn1"):
            groups["ffn1"].append((name, param))
        elif name.startswith("ffn2"):
            groups["ffn2"].append((name, param))
    return groups
