"""Autoregressive decoding strategies over an abstract next-token scorer.

Strategies: greedy, multinomial sampling, beam search (length-normalized,
with parked finished hypotheses), multinomial beam search (Gumbel top-k
expansion sampling), diverse beam search (Hamming penalty across groups),
and contrastive search. A brute-force enumerator serves as the test oracle
for the normalized-score argmax.

Determinism rules used everywhere: argmax ties resolve to the lowest token
id, ranked ties resolve to the lexicographically smallest generated
suffix, and all sampling flows from the seed in DecodeParams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from capkit.errors import CapkitError, ConfigError

STRATEGIES = (
    "greedy",
    "multinomial",
    "beam",
    "multinomial_beam",
    "diverse_beam",
    "contrastive",
)

ORACLE_SPACE_LIMIT = 10**7
GREEDY_TEMPERATURE = 1e-4  # below this, sampling clamps to argmax


class ScorerProtocolError(CapkitError):
    """The scorer returned a malformed distribution or lacks a capability."""


@dataclass(frozen=True)
class DecodeParams:
    end_token: int
    max_len: int
    strategy: str = "greedy"
    forced_prefix: tuple[int, ...] = ()
    num_beams: int = 1
    num_groups: int = 1
    diversity_penalty: float = 0.0
    temperature: float = 1.0
    top_k: int = 0  # 0 disables truncation
    contrastive_alpha: float = 0.0
    contrastive_k: int = 4
    length_penalty: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.max_len < 0:
            raise ConfigError("max_len must be >= 0")
        if self.num_beams < 1:
            raise ConfigError("num_beams must be >= 1")
        if self.num_groups < 1 or self.num_beams % self.num_groups:
            raise ConfigError(
                f"num_groups ({self.num_groups}) must divide num_beams "
                f"({self.num_beams})"
            )
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")
        if not 0.0 <= self.contrastive_alpha <= 1.0:
            raise ConfigError("contrastive alpha must be in [0, 1]")
        if self.contrastive_k < 1:
            raise ConfigError("contrastive candidate count must be >= 1")
        if self.top_k < 0:
            raise ConfigError("top_k must be >= 0")
        if self.length_penalty < 0:
            raise ConfigError("length_penalty must be >= 0")
        if self.diversity_penalty < 0:
            raise ConfigError("diversity_penalty must be >= 0")
        object.__setattr__(self, "forced_prefix", tuple(int(t) for t in self.forced_prefix))


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[int, ...]  # includes the forced prefix
    logprob: float  # sum over generated tokens only
    score: float  # logprob / n_generated ** length_penalty
    finished: bool
    prefix_len: int = 0

    @property
    def generated(self) -> tuple[int, ...]:
        return self.tokens[self.prefix_len :]


def _checked_logprobs(scorer, prefix) -> np.ndarray:
    lp = np.asarray(scorer.next_logprobs(tuple(prefix)), dtype=np.float64)
    if lp.shape != (scorer.vocab_size,):
        raise ScorerProtocolError(
            f"scorer returned shape {lp.shape}, expected ({scorer.vocab_size},)"
        )
    if np.any(np.isnan(lp)) or np.any(lp == np.inf):
        raise ScorerProtocolError("scorer returned NaN or +inf log-probabilities")
    m = lp.max()
    if m == -np.inf:
        raise ScorerProtocolError("scorer returned an all-zero distribution")
    lse = m + np.log(np.exp(lp - m).sum())
    if abs(lse) > 1e-4:
        raise ScorerProtocolError(f"log-probabilities do not normalize: lse={lse:.3g}")
    return lp


def _validate(scorer, params: DecodeParams) -> None:
    vocab = scorer.vocab_size
    if not 0 <= params.end_token < vocab:
        raise ConfigError(f"end_token {params.end_token} outside vocab of {vocab}")
    for tok in params.forced_prefix:
        if not 0 <= tok < vocab:
            raise ConfigError(f"forced_prefix token {tok} outside vocab of {vocab}")


def _finalize(tokens, logprob, finished, params: DecodeParams) -> Hypothesis:
    n_gen = len(tokens) - len(params.forced_prefix)
    score = logprob / max(1, n_gen) ** params.length_penalty
    return Hypothesis(tuple(tokens), float(logprob), float(score), finished,
                      len(params.forced_prefix))


def _rank_key(hyp: Hypothesis):
    # best first under min(): higher score, then lexicographically
    # smallest generated token sequence
    return (-hyp.score, hyp.generated)


def best_of(hypotheses) -> Hypothesis:
    return min(hypotheses, key=_rank_key)


# ---------------------------------------------------------------------------
# single-path strategies

def greedy(scorer, params: DecodeParams) -> Hypothesis:
    """Argmax decoding; ties go to the lowest token id."""
    _validate(scorer, params)
    tokens = list(params.forced_prefix)
    logprob = 0.0
    finished = False
    for _ in range(params.max_len):
        lp = _checked_logprobs(scorer, tokens)
        tok = int(np.argmax(lp))
        tokens.append(tok)
        logprob += lp[tok]
        if tok == params.end_token:
            finished = True
            break
    return _finalize(tokens, logprob, finished, params)


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return int(np.searchsorted(cdf, rng.random(), side="right"))


def _truncate_top_k(values: np.ndarray, k: int) -> np.ndarray:
    """Mask everything outside the top-k (ties keep lower ids) to -inf."""
    if k <= 0 or k >= len(values):
        return values
    keep = np.argsort(-values, kind="stable")[:k]
    out = np.full_like(values, -np.inf)
    out[keep] = values[keep]
    return out


def multinomial(
    scorer, params: DecodeParams, rng: np.random.Generator | None = None
) -> Hypothesis:
    """Per-step sampling from softmax(logprobs / temperature)."""
    _validate(scorer, params)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    tokens = list(params.forced_prefix)
    logprob = 0.0
    finished = False
    for _ in range(params.max_len):
        lp = _checked_logprobs(scorer, tokens)
        if params.temperature < GREEDY_TEMPERATURE:
            tok = int(np.argmax(lp))
        else:
            logits = _truncate_top_k(lp, params.top_k) / params.temperature
            probs = np.exp(logits - logits.max())
            probs /= probs.sum()
            tok = _sample_index(probs, rng)
        tokens.append(tok)
        logprob += lp[tok]
        if tok == params.end_token:
            finished = True
            break
    return _finalize(tokens, logprob, finished, params)


# ---------------------------------------------------------------------------
# beam family

def _beam_bound(cum: float, params: DecodeParams) -> float:
    """Optimistic bound on the normalized score any continuation of an
    active beam can reach (future log-probs are <= 0)."""
    if cum >= 0.0:
        return 0.0
    return cum / max(1, params.max_len) ** params.length_penalty


class _BeamState:
    """One independent beam-search lane (the whole search, or one group
    of diverse beam search)."""

    def __init__(self, width: int, params: DecodeParams):
        self.width = width
        self.params = params
        self.active: list[tuple[float, tuple[int, ...]]] = [
            (0.0, params.forced_prefix)
        ]
        self.parked: list[Hypothesis] = []
        self.done = params.max_len == 0

    def expand(self, scorer, step_penalty=None, sample_rng=None):
        """Run one step: expand active beams over the vocab, keep the top
        `width` candidates, parking those that emit the end token.

        step_penalty maps token id -> additive score penalty used only for
        ranking (diverse beam search). sample_rng switches ranking to
        Gumbel-perturbed keys (multinomial beam search). Returns the list
        of tokens selected this step.
        """
        if self.done:
            return []
        params = self.params
        prefix_len = len(params.forced_prefix)
        candidates = []  # (rank_value, cum, tokens)
        for cum, toks in self.active:
            lp = _checked_logprobs(scorer, toks)
            ranked = lp if step_penalty is None else lp - step_penalty
            if sample_rng is not None and params.top_k:
                ranked = _truncate_top_k(ranked, params.top_k)
            for v in range(scorer.vocab_size):
                if ranked[v] == -np.inf:
                    continue
                candidates.append((cum + ranked[v], cum + lp[v], toks + (v,)))

        if sample_rng is not None and params.temperature >= GREEDY_TEMPERATURE:
            keys = np.array([c[0] for c in candidates]) / params.temperature
            gumbel = -np.log(-np.log(sample_rng.random(len(keys))))
            perturbed = keys + gumbel
            order = sorted(
                range(len(candidates)),
                key=lambda i: (-perturbed[i], candidates[i][2][prefix_len:]),
            )
        else:
            order = sorted(
                range(len(candidates)),
                key=lambda i: (-candidates[i][0], candidates[i][2][prefix_len:]),
            )

        selected_tokens = []
        new_active = []
        for i in order[: self.width]:
            _, cum, toks = candidates[i]
            selected_tokens.append(toks[-1])
            if toks[-1] == params.end_token:
                self.parked.append(_finalize(toks, cum, True, params))
            else:
                new_active.append((cum, toks))
        self.active = new_active
        self.parked.sort(key=_rank_key)
        del self.parked[self.width :]

        if not self.active:
            self.done = True
        elif len(self.parked) == self.width:
            bound = max(_beam_bound(cum, params) for cum, _ in self.active)
            if bound < self.parked[-1].score:
                self.done = True
        return selected_tokens

    def results(self) -> list[Hypothesis]:
        final = list(self.parked)
        final.extend(
            _finalize(toks, cum, False, self.params) for cum, toks in self.active
        )
        final.sort(key=_rank_key)
        return final[: self.width]


def beam_search(scorer, params: DecodeParams) -> tuple[Hypothesis, list[Hypothesis]]:
    """Length-normalized beam search. Returns (best, full beam).

    Width 1 reduces exactly to greedy; the search stops early once no
    active beam's optimistic bound can beat the worst parked hypothesis.
    """
    _validate(scorer, params)
    state = _BeamState(params.num_beams, params)
    for _ in range(params.max_len):
        if state.done:
            break
        state.expand(scorer)
    results = state.results()
    return results[0], results


def multinomial_beam(
    scorer, params: DecodeParams, rng: np.random.Generator | None = None
) -> Hypothesis:
    """Beam search that samples expansions (Gumbel top-k over cumulative
    scores at the given temperature) instead of taking the arg-top-k."""
    _validate(scorer, params)
    if rng is None:
        rng = np.random.default_rng(params.seed)
    state = _BeamState(params.num_beams, params)
    for _ in range(params.max_len):
        if state.done:
            break
        state.expand(scorer, sample_rng=rng)
    return state.results()[0]


def diverse_beam(scorer, params: DecodeParams) -> list[Hypothesis]:
    """Diverse beam search with a Hamming penalty: group g's step scores
    drop by diversity_penalty for every earlier group that selected the
    same token at this step. Returns the best hypothesis of each group."""
    _validate(scorer, params)
    width = params.num_beams // params.num_groups
    groups = [_BeamState(width, params) for _ in range(params.num_groups)]
    vocab = scorer.vocab_size
    for _ in range(params.max_len):
        if all(g.done for g in groups):
            break
        step_counts = np.zeros(vocab)
        for group in groups:
            penalty = params.diversity_penalty * step_counts
            selected = group.expand(scorer, step_penalty=penalty)
            for tok in selected:
                step_counts[tok] += 1
    return [group.results()[0] for group in groups]


# ---------------------------------------------------------------------------
# contrastive search

def _representation(scorer, prefix) -> np.ndarray:
    fn = getattr(scorer, "representation", None)
    if fn is None:
        raise ScorerProtocolError("scorer does not expose representation()")
    rep = np.asarray(fn(tuple(prefix)), dtype=np.float64)
    if rep.ndim != 1 or len(rep) == 0:
        raise ScorerProtocolError("representation must be a non-empty vector")
    return rep


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def contrastive(scorer, params: DecodeParams) -> Hypothesis:
    """Contrastive search: among the top-k next tokens, maximize
    (1 - alpha) * p(v | prefix) - alpha * max_j cos(repr(prefix + v),
    repr(prefix[:j])), the degeneracy penalty ranging over all previous
    positions (forced prefix included)."""
    _validate(scorer, params)
    alpha = params.contrastive_alpha
    if getattr(scorer, "representation", None) is None:
        raise ScorerProtocolError("scorer does not expose representation()")
    tokens = list(params.forced_prefix)
    prev_reprs = [
        _representation(scorer, tokens[: j + 1]) for j in range(len(tokens))
    ] if alpha > 0.0 else []
    logprob = 0.0
    finished = False
    for _ in range(params.max_len):
        lp = _checked_logprobs(scorer, tokens)
        probs = np.exp(lp)
        top = np.argsort(-probs, kind="stable")[: params.contrastive_k]
        best_tok = None
        best_val = -np.inf
        best_repr = None
        for v in top:
            v = int(v)
            if alpha > 0.0:
                rep = _representation(scorer, tokens + [v])
                penalty = max((_cosine(rep, r) for r in prev_reprs), default=0.0)
            else:
                rep, penalty = None, 0.0
            value = (1.0 - alpha) * probs[v] - alpha * penalty
            if value > best_val:
                best_tok, best_val, best_repr = v, value, rep
        tokens.append(best_tok)
        logprob += lp[best_tok]
        if alpha > 0.0:
            if best_repr is None:
                best_repr = _representation(scorer, tokens)
            prev_reprs.append(best_repr)
        if best_tok == params.end_token:
            finished = True
            break
    return _finalize(tokens, logprob, finished, params)


# ---------------------------------------------------------------------------
# oracle and dispatch

def brute_force_oracle(scorer, params: DecodeParams) -> Hypothesis:
    """Exhaustive enumeration of every sequence up to max_len; returns the
    argmax of the same normalized score (and tie-break) beam search uses."""
    _validate(scorer, params)
    vocab = scorer.vocab_size
    if vocab**params.max_len > ORACLE_SPACE_LIMIT:
        raise ConfigError(
            f"search space {vocab}^{params.max_len} exceeds "
            f"{ORACLE_SPACE_LIMIT}; brute force refused"
        )
    best: list[Hypothesis | None] = [None]

    def consider(tokens, cum, finished):
        hyp = _finalize(tokens, cum, finished, params)
        if best[0] is None or _rank_key(hyp) < _rank_key(best[0]):
            best[0] = hyp

    def dfs(tokens, cum, depth):
        if depth == params.max_len:
            consider(tokens, cum, False)
            return
        lp = _checked_logprobs(scorer, tokens)
        for v in range(vocab):
            if v == params.end_token:
                consider(tokens + (v,), cum + lp[v], True)
            else:
                dfs(tokens + (v,), cum + lp[v], depth + 1)

    dfs(params.forced_prefix, 0.0, 0)
    return best[0]


def decode(scorer, params: DecodeParams, rng=None) -> list[Hypothesis]:
    """Run the configured strategy; always returns a list of hypotheses
    (best first)."""
    if params.strategy == "greedy":
        return [greedy(scorer, params)]
    if params.strategy == "multinomial":
        return [multinomial(scorer, params, rng)]
    if params.strategy == "beam":
        _, beam = beam_search(scorer, params)
        return beam
    if params.strategy == "multinomial_beam":
        return [multinomial_beam(scorer, params, rng)]
    if params.strategy == "diverse_beam":
        return diverse_beam(scorer, params)
    if params.strategy == "contrastive":
        return [contrastive(scorer, params)]
    raise ConfigError(f"unknown strategy {params.strategy!r}")
