"""Pointer-network parser model: char-CNN + BiLSTM encoder, LSTM decoder,
biaffine pointer attention and biaffine labeler.

Sizes default to the full-scale hyper-parameters; desk-scale work uses
``ModelConfig.tiny()``.  All tensors are float64 and live in a flat named
parameter dict so checkpoints are trivial.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DiscoparseError, FormatError
from .trees import Token

PAD_ID = 0
UNK_ID = 1


@dataclass
class ModelConfig:
    cnn_window: int = 3
    cnn_filters: int = 50
    encoder_layers: int = 3
    encoder_size: int = 512          # hidden units per direction
    decoder_layers: int = 1
    decoder_size: int = 512
    word_embed_dim: int = 100
    pos_embed_dim: int = 100
    char_embed_dim: int = 100
    dropout: float = 0.33
    mlp_layers: int = 1
    mlp_activation: str = "elu"
    arc_mlp_size: int = 512
    label_mlp_size: int = 128
    use_pos: bool = True
    use_pretrained: bool = False

    def __post_init__(self):
        sizes = (self.cnn_window, self.cnn_filters, self.encoder_layers,
                 self.encoder_size, self.decoder_layers, self.decoder_size,
                 self.word_embed_dim, self.pos_embed_dim, self.char_embed_dim,
                 self.mlp_layers, self.arc_mlp_size, self.label_mlp_size)
        if any(s <= 0 for s in sizes):
            raise ValueError("all model sizes must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0,1)")
        if self.mlp_activation != "elu":
            raise ValueError("only the elu MLP activation is supported")

    @property
    def input_dim(self) -> int:
        dim = self.cnn_filters + self.word_embed_dim
        if self.use_pos:
            dim += self.pos_embed_dim
        return dim

    @classmethod
    def tiny(cls, **overrides) -> "ModelConfig":
        """Desk-scale profile used by tests and the bundled experiments."""
        base = dict(cnn_window=3, cnn_filters=8, encoder_layers=1,
                    encoder_size=48, decoder_size=48, word_embed_dim=24,
                    pos_embed_dim=8, char_embed_dim=8, dropout=0.0,
                    arc_mlp_size=48, label_mlp_size=24)
        base.update(overrides)
        return cls(**base)


@dataclass
class Vocabulary:
    word2id: dict[str, int]
    char2id: dict[str, int]
    pos2id: dict[str, int]
    label2id: dict[str, int]

    @classmethod
    def build(cls, sentences: list[list[Token]], labels: list[str]) -> "Vocabulary":
        word2id = {"<pad>": PAD_ID, "<unk>": UNK_ID}
        char2id = {"<pad>": PAD_ID, "<unk>": UNK_ID}
        pos2id = {"<pad>": PAD_ID, "<unk>": UNK_ID}
        for sent in sentences:
            for tok in sent:
                word2id.setdefault(tok.form.lower(), len(word2id))
                for ch in tok.form:
                    char2id.setdefault(ch, len(char2id))
                pos2id.setdefault(tok.pos, len(pos2id))
        label2id = {}
        for lab in labels:
            label2id.setdefault(lab, len(label2id))
        return cls(word2id, char2id, pos2id, label2id)

    @property
    def labels(self) -> list[str]:
        out = [""] * len(self.label2id)
        for lab, i in self.label2id.items():
            out[i] = lab
        return out

    def word_id(self, form: str) -> int:
        return self.word2id.get(form.lower(), UNK_ID)

    def char_ids(self, form: str) -> list[int]:
        return [self.char2id.get(ch, UNK_ID) for ch in form]

    def pos_id(self, pos: str) -> int:
        return self.pos2id.get(pos, UNK_ID)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        return cls(**json.loads(text))


def load_pretrained_embeddings(path) -> dict[str, np.ndarray]:
    """Whitespace-separated text vectors: ``word v1 v2 ... vD`` per line."""
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise FormatError(f"{path}:{ln}: non-numeric embedding value")
    return vectors


class Model:
    def __init__(self, config: ModelConfig, vocab: Vocabulary, seed: int = 1,
                 pretrained: dict[str, np.ndarray] | None = None):
        self.config = config
        self.vocab = vocab
        self.seed = seed
        self.params: dict[str, Tensor] = {}
        self.rng = np.random.default_rng(seed + 1)  # dropout masks
        init = np.random.default_rng(seed)

        def glorot(*shape):
            fan_in, fan_out = (shape[0], shape[-1]) if len(shape) > 1 else (shape[0], shape[0])
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            return init.uniform(-bound, bound, size=shape)

        def param(name, arr):
            self.params[name] = Tensor(arr, requires_grad=True)

        c = config
        param("emb/word", glorot(len(vocab.word2id), c.word_embed_dim))
        param("emb/char", glorot(len(vocab.char2id), c.char_embed_dim))
        if c.use_pos:
            param("emb/pos", glorot(len(vocab.pos2id), c.pos_embed_dim))
        param("emb/x0", glorot(c.input_dim))
        param("cnn/filters", glorot(c.cnn_window * c.char_embed_dim, c.cnn_filters))
        param("cnn/bias", np.zeros(c.cnn_filters))

        def lstm_params(prefix, in_dim, hidden):
            param(f"{prefix}/w_ih", glorot(in_dim, 4 * hidden))
            param(f"{prefix}/w_hh", glorot(hidden, 4 * hidden))
            param(f"{prefix}/b", np.zeros(4 * hidden))

        in_dim = c.input_dim
        for layer in range(c.encoder_layers):
            for direction in ("fw", "bw"):
                lstm_params(f"enc/l{layer}/{direction}", in_dim, c.encoder_size)
            in_dim = 2 * c.encoder_size
        dec_in = 2 * c.encoder_size
        for layer in range(c.decoder_layers):
            lstm_params(f"dec/l{layer}", dec_in, c.decoder_size)
            dec_in = c.decoder_size

        def mlp_params(prefix, in_dim, out_dim):
            for layer in range(c.mlp_layers):
                param(f"{prefix}/l{layer}/W", glorot(in_dim, out_dim))
                param(f"{prefix}/l{layer}/b", np.zeros(out_dim))
                in_dim = out_dim

        m_arc, m_lab = c.arc_mlp_size, c.label_mlp_size
        mlp_params("arc/dep_mlp", c.decoder_size, m_arc)
        mlp_params("arc/head_mlp", 2 * c.encoder_size, m_arc)
        param("arc/W", glorot(m_arc, m_arc))
        param("arc/U", glorot(m_arc))
        param("arc/V", glorot(m_arc))
        param("arc/b", np.zeros(1))
        L = len(vocab.label2id)
        mlp_params("lab/dep_mlp", c.decoder_size, m_lab)
        mlp_params("lab/head_mlp", 2 * c.encoder_size, m_lab)
        param("lab/W", glorot(L * m_lab, m_lab))
        param("lab/U", glorot(L, m_lab))
        param("lab/V", glorot(L, m_lab))
        param("lab/b", np.zeros(L))

        if pretrained:
            table = self.params["emb/word"].data
            for word, vec in pretrained.items():
                wid = vocab.word2id.get(word.lower())
                if wid is not None:
                    if vec.shape != (c.word_embed_dim,):
                        raise DiscoparseError(
                            f"pretrained vector for {word!r} has dim {vec.shape[0]},"
                            f" expected {c.word_embed_dim}")
                    table[wid] = vec

    # -- building blocks ---------------------------------------------------

    def _drop(self, x: Tensor, training: bool) -> Tensor:
        return ad.dropout(x, self.config.dropout, training, self.rng)

    def char_repr(self, form: str) -> Tensor:
        ids = self.vocab.char_ids(form) or [PAD_ID]
        chars = self.params["emb/char"][np.array(ids)]
        return ad.conv1d_maxpool(chars, self.params["cnn/filters"],
                                 self.params["cnn/bias"], self.config.cnn_window)

    def embed(self, tokens: list[Token], training: bool = False) -> list[Tensor]:
        """x_i = char-CNN ⊕ word ⊕ (POS) embedding, for the real words."""
        out = []
        for tok in tokens:
            parts = [self.char_repr(tok.form),
                     self.params["emb/word"][self.vocab.word_id(tok.form)]]
            if self.config.use_pos:
                parts.append(self.params["emb/pos"][self.vocab.pos_id(tok.pos)])
            out.append(self._drop(ad.concat(parts), training))
        return out

    def _run_lstm(self, prefix: str, xs: list[Tensor], hidden: int) -> list[Tensor]:
        h = Tensor(np.zeros(hidden))
        c = Tensor(np.zeros(hidden))
        w_ih, w_hh, b = (self.params[f"{prefix}/w_ih"],
                         self.params[f"{prefix}/w_hh"], self.params[f"{prefix}/b"])
        out = []
        for x in xs:
            h, c = ad.lstm_cell(x, h, c, w_ih, w_hh, b)
            out.append(h)
        return out

    def encode_sentence(self, tokens: list[Token],
                        training: bool = False) -> list[Tensor]:
        """Encoder states h_0..h_n (h_0 is the dummy-root state)."""
        xs = [self.params["emb/x0"]] + self.embed(tokens, training)
        c = self.config
        for layer in range(c.encoder_layers):
            if layer > 0:
                xs = [self._drop(x, training) for x in xs]
            fw = self._run_lstm(f"enc/l{layer}/fw", xs, c.encoder_size)
            bw = self._run_lstm(f"enc/l{layer}/bw", list(reversed(xs)), c.encoder_size)
            xs = [ad.concat([f, b]) for f, b in zip(fw, reversed(bw))]
        return xs

    def decoder_states(self, hs: list[Tensor],
                       training: bool = False) -> list[Tensor]:
        """s_1..s_n; decoder input r_i = h_{i-1} + h_i + h_{i+1}."""
        n = len(hs) - 1
        zero = Tensor(np.zeros(2 * self.config.encoder_size))
        rs = [hs[i - 1] + hs[i] + (hs[i + 1] if i < n else zero)
              for i in range(1, n + 1)]
        xs = rs
        for layer in range(self.config.decoder_layers):
            if layer > 0:
                xs = [self._drop(x, training) for x in xs]
            xs = self._run_lstm(f"dec/l{layer}", xs, self.config.decoder_size)
        return xs

    def _mlp(self, prefix: str, x: Tensor, training: bool) -> Tensor:
        for layer in range(self.config.mlp_layers):
            x = ad.elu(ad.matmul(x, self.params[f"{prefix}/l{layer}/W"])
                       + self.params[f"{prefix}/l{layer}/b"])
            x = self._drop(x, training)
        return x

    def arc_head_matrix(self, hs: list[Tensor], training: bool = False) -> Tensor:
        rows = [ad.reshape(self._mlp("arc/head_mlp", h, training), (1, -1))
                for h in hs]
        return ad.concat(rows, axis=0)  # [n+1, m_arc]

    def attention_scores(self, s_t: Tensor, head_mat: Tensor,
                         training: bool = False) -> Tensor:
        """Biaffine pointer scores over the n+1 head candidates."""
        dep = self._mlp("arc/dep_mlp", s_t, training)
        W, U, V, b = (self.params["arc/W"], self.params["arc/U"],
                      self.params["arc/V"], self.params["arc/b"])
        return (ad.matmul(head_mat, ad.matmul(W, dep))
                + ad.matmul(dep, U) + ad.matmul(head_mat, V) + b[0])

    def label_scores(self, s_t: Tensor, h_j: Tensor,
                     training: bool = False) -> Tensor:
        """Biaffine labeler scores, one per label in the inventory."""
        dep = self._mlp("lab/dep_mlp", s_t, training)
        head = self._mlp("lab/head_mlp", h_j, training)
        L = len(self.vocab.label2id)
        m = self.config.label_mlp_size
        bilinear = ad.reshape(ad.matmul(self.params["lab/W"], head), (L, m))
        return (ad.matmul(bilinear, dep)
                + ad.matmul(self.params["lab/U"], dep)
                + ad.matmul(self.params["lab/V"], head)
                + self.params["lab/b"])

    def forward(self, tokens: list[Token], training: bool = False):
        """Full pointer forward pass.

        Returns (hs, ss, scores): encoder states h_0..h_n, decoder states
        s_1..s_n, and per-word attention score vectors over 0..n.
        """
        hs = self.encode_sentence(tokens, training)
        ss = self.decoder_states(hs, training)
        head_mat = self.arc_head_matrix(hs, training)
        scores = [self.attention_scores(s, head_mat, training) for s in ss]
        return hs, ss, scores

    # -- parameter plumbing ------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        return self.params

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        if set(arrays) != set(self.params):
            raise DiscoparseError("checkpoint parameter names do not match model")
        for k, v in arrays.items():
            if v.shape != self.params[k].data.shape:
                raise DiscoparseError(f"shape mismatch for {k}")
            self.params[k].data = v.copy()

    def save(self, path) -> None:
        extra = {"config.json": json.dumps(asdict(self.config)),
                 "vocab.json": self.vocab.to_json(),
                 "seed.json": json.dumps({"seed": self.seed})}
        ad.save_tensors(path, self.state_arrays(), extra=extra)

    @classmethod
    def load(cls, path) -> "Model":
        arrays, extra = ad.load_tensors(path)
        config = ModelConfig(**json.loads(extra["config.json"]))
        vocab = Vocabulary.from_json(extra["vocab.json"])
        seed = json.loads(extra.get("seed.json", '{"seed": 1}'))["seed"]
        model = cls(config, vocab, seed=seed)
        model.load_state_arrays(arrays)
        return model
