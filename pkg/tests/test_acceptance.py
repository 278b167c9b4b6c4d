"""End-to-end acceptance suite: one test and one printed PASS/FAIL line per
criterion. The learning smoke test is the slow entry (several minutes)."""

import hashlib
import json
import struct
import time

import numpy as np
import pytest
import scipy.sparse as sp

from proofguide.corpus import SAT_PROBLEMS, TRAINABLE_PROBLEMS, UNSAT_PROBLEMS, load_problem
from proofguide.engine import Limits, OutcomeKind, run_episode
from proofguide.features import (
    VectorizerConfig,
    chain_patterns,
    md5_index,
    term_walks,
)
from proofguide.fol import SymbolTable
from proofguide.network import NetworkConfig, PolicyParameters, StateFeatures, softmax
from proofguide.policies import (
    AgeWeightPolicy,
    FIFOPolicy,
    NeuralPolicy,
    UniformRandomPolicy,
    sample_action,
    tempered_probs,
)
from proofguide.training import (
    ExampleBuffer,
    TrainerConfig,
    TrainingContext,
    TrainingExample,
    compute_loss,
    train_iteration,
)
from proofguide.verify import derivation_dump, verify_derivation

from conftest import make_random_clause
from test_features import oracle_chain_patterns, oracle_term_walks

SMOKE_VCFG = VectorizerConfig(chain_dim=64, walk_dims=(32, 32, 32))


def report(criterion: str, ok: bool) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {criterion}")
    assert ok, criterion


def smoke_params(seed: int) -> PolicyParameters:
    return PolicyParameters.initialize(
        NetworkConfig(input_dim=SMOKE_VCFG.dim, embed_width=32), seed
    )


def quick_trained_params() -> PolicyParameters:
    cfg = TrainerConfig(seed=1, epochs=3)
    params = smoke_params(1)
    corpus = [(n, load_problem(n)) for n in TRAINABLE_PROBLEMS[:8]]
    buf = ExampleBuffer(cfg.buffer_window)
    ctx = TrainingContext(params, cfg)
    for it in (1, 2):
        train_iteration(corpus, params, buf, cfg, SMOKE_VCFG, it, ctx, Limits(100, 5.0))
    return params


def test_soundness():
    """Every refutation any policy finds must survive independent checking."""
    trained = quick_trained_params()
    policies = {
        "baseline": lambda: AgeWeightPolicy(),
        "random": lambda: UniformRandomPolicy(np.random.default_rng(7)),
        "trained": lambda: NeuralPolicy(trained, SMOKE_VCFG),
    }
    refutations = 0
    ok = True
    for name, make in policies.items():
        for pid in UNSAT_PROBLEMS:
            ep = run_episode(load_problem(pid), make(), Limits(400, 5.0), problem_id=pid)
            if ep.outcome.kind is not OutcomeKind.REFUTATION:
                continue
            refutations += 1
            result = verify_derivation(derivation_dump(ep.state, ep.outcome))
            if not result.ok:
                print(f"  {name}/{pid}: {result.message}")
                ok = False
    ok = ok and refutations > 0
    report(f"soundness: {refutations} refutations all independently verified", ok)


def test_completeness():
    refuted = 0
    for pid in UNSAT_PROBLEMS:
        ep = run_episode(load_problem(pid), FIFOPolicy(), Limits(2000, 120.0), problem_id=pid)
        refuted += ep.outcome.kind is OutcomeKind.REFUTATION
    saturated = 0
    for pid in SAT_PROBLEMS:
        ep = run_episode(load_problem(pid), FIFOPolicy(), Limits(2000, 120.0), problem_id=pid)
        saturated += ep.outcome.kind is OutcomeKind.SATURATED
    report(
        f"completeness: breadth-first refutes {refuted}/{len(UNSAT_PROBLEMS)} unsat, "
        f"{saturated}/{len(SAT_PROBLEMS)} sat saturate",
        refuted >= 25 and saturated == len(SAT_PROBLEMS),
    )


def test_vectorizer_oracle_equivalence():
    rng = np.random.default_rng(2024)
    table = SymbolTable()
    mismatches = 0
    for _ in range(500):
        c = make_random_clause(rng, table, depth=4)
        got = {(p.linearization, p.positive): n for p, n in chain_patterns(c).items()}
        if got != dict(oracle_chain_patterns(c)):
            mismatches += 1
        for length in (1, 2, 3):
            if term_walks(c, length) != oracle_term_walks(c, length):
                mismatches += 1
    report(f"vectorizer oracle equivalence: {mismatches} mismatches over 500 clauses",
           mismatches == 0)


def test_hash_bit_stability():
    # second implementation: struct-based big-endian decode, written
    # independently of the int.from_bytes production path
    digest = hashlib.md5(b"q(*,g(*,*))").digest()
    (value,) = struct.unpack(">Q", digest[:8])
    oracle = value % 645
    main = md5_index("q(*,g(*,*))", 645)
    report(
        f"hash bit-stability: index {main} == oracle {oracle} == frozen 30",
        main == oracle == 30 and value == 14204397950971430535,
    )


def _random_example(rng, params, M, N):
    dim = params.config.input_dim

    def rand_csr(rows):
        dense = rng.random((rows, dim)) * (rng.random((rows, dim)) < 0.4)
        return sp.csr_matrix(dense)

    onehots = np.zeros((M, 2))
    for i in range(M):
        onehots[i, rng.integers(2)] = 1.0
    feats = StateFeatures(
        conjecture=rand_csr(1 + int(rng.integers(2))),
        processed=rand_csr(N),
        actions=rand_csr(M),
        rule_onehots=onehots,
    )
    return TrainingExample(
        snapshot=None,
        action_index=int(rng.integers(M)),
        reward=float(rng.random()),
        iteration=0,
        problem_id="synthetic",
        _feats=feats,
    )


def test_gradient_correctness():
    rng = np.random.default_rng(77)
    lam = 0.004
    eps = 1e-5
    start = time.time()
    worst = 0.0
    configs = 0
    ok = True
    for M in range(1, 6):
        for N in range(1, 5):
            configs += 1
            params = PolicyParameters.initialize(
                NetworkConfig(input_dim=20, embed_width=8, dropout=0.0), int(rng.integers(1e6))
            )
            batch = [_random_example(rng, params, M, N)]
            _, grads = compute_loss(batch, params, lam, train=False)
            for name, theta in params.arrays.items():
                flat = theta.ravel()
                gflat = grads[name].ravel()
                for i in range(flat.size):
                    orig = flat[i]
                    flat[i] = orig + eps
                    up, _ = compute_loss(batch, params, lam, train=False)
                    flat[i] = orig - eps
                    down, _ = compute_loss(batch, params, lam, train=False)
                    flat[i] = orig
                    fd = (up - down) / (2 * eps)
                    an = gflat[i]
                    # absolute floor absorbs finite-difference cancellation
                    # noise on near-zero entries
                    err = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
                    worst = max(worst, err if abs(fd - an) > 1e-8 else 0.0)
                    if err > 1e-4 and abs(fd - an) > 1e-8:
                        ok = False
    elapsed = time.time() - start
    report(
        f"gradient correctness: {configs} configs, worst rel err {worst:.2e}, "
        f"{elapsed:.1f}s",
        ok and configs >= 20 and elapsed < 60,
    )


def test_distribution_properties():
    rng = np.random.default_rng(5)
    max_dev = 0.0
    identity_ok = True
    argmax_ok = True
    for _ in range(10_000):
        scores = rng.standard_normal(int(rng.integers(2, 12))) * 10
        p = softmax(scores)
        t = tempered_probs(p, float(rng.uniform(0.5, 4.0)))
        max_dev = max(max_dev, abs(p.sum() - 1.0), abs(t.sum() - 1.0))
        if not np.allclose(tempered_probs(p, 1.0), p, atol=1e-12):
            identity_ok = False
        if sample_action(p, step=11, tau=1.13, tau0=11, rng=rng) != int(np.argmax(p)):
            argmax_ok = False
    report(
        f"distribution properties: max |sum-1| {max_dev:.1e}, tau=1 identity, "
        f"argmax past threshold",
        max_dev < 1e-9 and identity_ok and argmax_ok,
    )


def test_loss_decomposition():
    rng = np.random.default_rng(9)
    params = PolicyParameters.initialize(
        NetworkConfig(input_dim=20, embed_width=8, dropout=0.0), 3
    )
    batch = [_random_example(rng, params, M=4, N=2) for _ in range(8)]
    lam = 0.004
    full, _ = compute_loss(batch, params, lam, train=False)
    plain, _ = compute_loss(batch, params, 0.0, train=False)
    entropies = []
    from proofguide.network import Forward

    for ex in batch:
        p = Forward(ex.features(), params).probs
        entropies.append(float(-(p * np.log(p)).sum()))
    want = -lam * float(np.mean(entropies))
    got = full - plain
    report(
        f"loss decomposition: L(lambda)-L(0) = {got:.3e}, -lambda*meanH = {want:.3e}",
        abs(got - want) <= 1e-12 * max(1.0, abs(want)) + 1e-15,
    )


def _greedy_eval(params, corpus):
    """Steps to refutation per problem under the deterministic policy."""
    steps = {}
    for pid, problem in corpus:
        ep = run_episode(
            problem, NeuralPolicy(params, SMOKE_VCFG), Limits(200, 3.0), problem_id=pid
        )
        if ep.solved:
            steps[pid] = ep.elapsed_steps
    return steps


def _learning_run(seed: int):
    cfg = TrainerConfig(seed=seed, epochs=10)
    params = smoke_params(seed)
    corpus = [(n, load_problem(n)) for n in TRAINABLE_PROBLEMS]
    buf = ExampleBuffer(cfg.buffer_window)
    ctx = TrainingContext(params, cfg)
    evals = []
    for it in range(1, 11):
        train_iteration(corpus, params, buf, cfg, SMOKE_VCFG, it, ctx, Limits(200, 5.0))
        evals.append((it, _greedy_eval(params, corpus)))
    it1_steps = evals[0][1]
    best_it, best_steps = max(evals, key=lambda e: (len(e[1]), e[0]))
    common = set(it1_steps) & set(best_steps)
    m1 = float(np.mean([it1_steps[n] for n in common])) if common else 0.0
    mb = float(np.mean([best_steps[n] for n in common])) if common else 0.0
    solved_ok = len(best_steps) >= len(it1_steps)
    length_ok = bool(common) and m1 > 0 and (m1 - mb) / m1 >= 0.10
    return solved_ok and length_ok, (
        f"seed {seed}: solved {len(it1_steps)}->{len(best_steps)} (it{best_it}), "
        f"common mean steps-to-proof {m1:.2f}->{mb:.2f}"
    )


def test_learning_smoke():
    """Ten training iterations must beat iteration 1 on solved count and cut
    mean proof length on the commonly-solved set by >= 10%, for >= 2 of 3
    fixed seeds, inside a 30 minute budget."""
    start = time.time()
    passed = 0
    details = []
    for seed in (1, 2, 3):
        ok, line = _learning_run(seed)
        passed += ok
        details.append(f"{line} [{'ok' if ok else 'no'}]")
    elapsed = time.time() - start
    for line in details:
        print("  " + line)
    report(
        f"learning smoke test: {passed}/3 seeds improved, {elapsed/60:.1f} min",
        passed >= 2 and elapsed < 30 * 60,
    )


def test_determinism(tmp_path):
    from proofguide.cli import main

    problem = tmp_path / "chain.p"
    problem.write_text(
        "cnf(a, axiom, p0(c)).\n"
        "cnf(b, axiom, ~p0(X) | p1(X)).\n"
        "cnf(c, axiom, ~p1(X) | p2(X)).\n"
        "cnf(g, negated_conjecture, ~p2(c)).\n"
    )
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "vectorizer": {"chain_dim": 32, "walk_dims": [16, 16, 16]},
        "network": {"embed_width": 16},
        "trainer": {"epochs": 3},
    }))
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        code = main([
            "train", str(problem), "--iterations", "3", "--max-steps", "100",
            "--seed", "11", "--config", str(config), "--out", str(out),
        ])
        assert code == 0
        files = sorted(p.name for p in out.iterdir())
        outputs.append({name: (out / name).read_bytes() for name in files})
    same = outputs[0] == outputs[1]
    report(
        f"determinism: {len(outputs[0])} output files byte-identical across runs",
        same,
    )
