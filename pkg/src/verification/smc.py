"""
Statistical model checking por Monte Carlo.

Semántica estocástica del sistema compuesto:
- Las instancias committed se disparan sin paso del tiempo (proceso uniforme,
  rama probabilística por peso, resto del no determinismo uniforme).
- Cada instancia de envío/recepción habilitada muestrea un retardo
  exponencial (write_rate / read_rate); gana el mínimo.
- Cada SocketTimeout(j) tiene un reloj que avanza con el tiempo global y se
  reinicia con la actividad de socket del servicio j; si alcanza `timeout`
  antes que el ganador de la carrera, se dispara TimeoutFire(j) y la
  ejecución termina.

Cada ejecución usa su propio flujo numpy Generator(Philox) derivado de
(seed, índice de ejecución), así que el resultado no depende de `jobs`.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.core import JOBS
from src.core.errors import DomainError
from src.model.params import SystemParams, TimeoutMode
from src.model.predicates import Expression, Predicate, eval_expression, eval_predicate
from src.model.queries import ExpectedMax, Probability
from src.model.semantics import TIMEOUT_EDGE, enabled, fire_with_effects, initial_state
from src.model.state import DelayClass, Process, SvcLocation, SystemState, TransitionInstance
from src.model.trace import Trace

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.Philox"
BATCH_SIZE = 500


# ============================================================================
# TIPOS
# ============================================================================

@dataclass
class StochasticRun:
    """Una ejecución simulada hasta el horizonte, terminación o timeout."""

    seed: int
    run_index: int
    horizon: float
    end_time: float = 0.0
    # terminated | timeout | horizon | deadlock
    end_reason: str = ""
    events: int = 0
    trace: Optional[Trace] = None
    satisfied: Optional[bool] = None
    max_value: Optional[int] = None


@dataclass
class Interval:
    """Estimación [p'-ε, p'+ε] con confianza 1-α."""

    p_hat: float
    lo: float
    hi: float
    confidence: float
    runs: int
    seed: int
    epsilon: float
    rng: str = RNG_ALGORITHM
    verdicts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool), repr=False)

    def to_record(self) -> dict:
        return {
            "p_hat": f"{self.p_hat:.6f}",
            "interval": f"[{self.lo:.6f},{self.hi:.6f}]",
            "confidence": f"{self.confidence:.4f}",
            "runs": str(self.runs),
            "seed": str(self.seed),
            "rng": self.rng,
        }


@dataclass
class ExpectedMaxResult:
    mean: float
    ci95: float
    runs: int
    seed: int
    rng: str = RNG_ALGORITHM
    values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    def to_record(self) -> dict:
        return {
            "mean": f"{self.mean:.6f}",
            "ci95": f"{self.ci95:.6f}",
            "runs": str(self.runs),
            "seed": str(self.seed),
            "rng": self.rng,
        }


# ============================================================================
# COTA DE CHERNOFF-HOEFFDING
# ============================================================================

def chernoff_runs(alpha: float, epsilon: float) -> int:
    """
    Número de ejecuciones N = ⌈(ln 2 − ln α) / (2ε²)⌉.

    Raises:
        DomainError: Si α o ε no están en (0, 1)
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha debe estar en (0,1): {alpha}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon debe estar en (0,1): {epsilon}")
    return math.ceil((math.log(2) - math.log(alpha)) / (2 * epsilon ** 2))


# ============================================================================
# SIMULACIÓN
# ============================================================================

def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Flujo Philox propio de la ejecución run_index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run_index])))


def _pick_committed(rng: np.random.Generator, instances: Sequence[TransitionInstance]) -> TransitionInstance:
    processes = sorted({t.process for t in instances})
    process = processes[rng.integers(len(processes))]
    mine = [t for t in instances if t.process == process]
    edges = list(dict.fromkeys(t.edge_id for t in mine))
    if len(edges) > 1:
        weights = np.array([next(t.weight for t in mine if t.edge_id == e) for e in edges], dtype=float)
        edge = edges[rng.choice(len(edges), p=weights / weights.sum())]
    else:
        edge = edges[0]
    group = [t for t in mine if t.edge_id == edge]
    return group[rng.integers(len(group))] if len(group) > 1 else group[0]


def _armed(state: SystemState, j: int) -> bool:
    return state.svc_locs[j] is not SvcLocation.Terminated


def simulate_run(
    params: SystemParams,
    horizon: float,
    seed: int,
    run_index: int = 0,
    pred: Optional[Predicate] = None,
    expr: Optional[Expression] = None,
    keep_trace: bool = True,
) -> StochasticRun:
    """
    Simula una ejecución de la semántica estocástica.

    Args:
        params: Parámetros del sistema
        horizon: Límite de tiempo global
        seed: Semilla base
        run_index: Índice de ejecución (deriva el flujo RNG)
        pred: Si se da, run.satisfied indica si algún estado visitado lo cumple
        expr: Si se da, run.max_value es el máximo sobre los estados visitados
        keep_trace: Guardar la traza completa con tiempos

    Returns:
        StochasticRun reproducible a partir de (seed, run_index)
    """
    if horizon <= 0:
        raise DomainError(f"el horizonte debe ser > 0: {horizon}")
    rng = run_rng(seed, run_index)
    timers_on = params.timeout_mode is TimeoutMode.NONDET
    state = initial_state(params, steps_capacity=0)
    n = params.n_services
    clocks = np.zeros(n)
    now = 0.0
    run = StochasticRun(seed, run_index, horizon)
    trace = Trace(state) if keep_trace else None

    def observe(s: SystemState) -> None:
        if pred is not None and not run.satisfied:
            run.satisfied = eval_predicate(s, pred, params)
        if expr is not None:
            value = eval_expression(s, expr, params)
            run.max_value = value if run.max_value is None else max(run.max_value, value)

    if pred is not None:
        run.satisfied = False
    observe(state)

    def step(t: TransitionInstance, at: float) -> None:
        nonlocal state
        state, touched = fire_with_effects(state, t)
        for j in touched:
            clocks[j] = 0.0
        run.events += 1
        if trace is not None:
            trace.append(t, state, at)
        observe(state)

    while True:
        if state.all_terminated():
            run.end_reason = "terminated"
            break
        if state.any_timeout():
            run.end_reason = "timeout"
            break

        instances = enabled(state, params)
        committed = [t for t in instances if t.delay_class is DelayClass.COMMITTED]
        if committed:
            step(_pick_committed(rng, committed), now)
            continue

        delayed = [t for t in instances if t.delay_class in (DelayClass.WRITE, DelayClass.READ)]
        winner: Optional[TransitionInstance] = None
        delay = math.inf
        if delayed:
            rates = np.array(
                [params.write_rate if t.delay_class is DelayClass.WRITE else params.read_rate for t in delayed]
            )
            samples = rng.exponential(1.0 / rates)
            k = int(np.argmin(samples))
            winner, delay = delayed[k], float(samples[k])

        armed = [j for j in range(n) if _armed(state, j)] if timers_on else []
        timeout_at = math.inf
        timeout_j = -1
        for j in armed:
            remaining = params.timeout - clocks[j]
            if remaining < timeout_at:
                timeout_at, timeout_j = remaining, j

        elapsed = min(delay, timeout_at)
        if math.isinf(elapsed):
            run.end_reason = "deadlock"
            break
        if now + elapsed > horizon:
            now = horizon
            run.end_reason = "horizon"
            break

        now += elapsed
        clocks[armed] += elapsed
        if timeout_at < delay:
            step(TransitionInstance(Process.timer(timeout_j), TIMEOUT_EDGE, (), 1, DelayClass.TIMEOUT_FIRE), now)
        else:
            step(winner, now)

    run.end_time = now
    run.trace = trace
    return run


# ============================================================================
# ESTIMACIÓN
# ============================================================================

def _run_batch(
    args: Tuple[SystemParams, float, int, Sequence[int], Optional[Predicate], Optional[Expression]],
) -> List[Tuple[Optional[bool], Optional[int]]]:
    params, horizon, seed, indices, pred, expr = args
    out = []
    for index in indices:
        run = simulate_run(params, horizon, seed, index, pred=pred, expr=expr, keep_trace=False)
        out.append((run.satisfied, run.max_value))
    return out


def _run_many(
    params: SystemParams,
    horizon: float,
    seed: int,
    runs: int,
    pred: Optional[Predicate],
    expr: Optional[Expression],
    jobs: int,
) -> List[Tuple[Optional[bool], Optional[int]]]:
    batches = [
        (params, horizon, seed, range(start, min(start + BATCH_SIZE, runs)), pred, expr)
        for start in range(0, runs, BATCH_SIZE)
    ]
    results: List[Tuple[Optional[bool], Optional[int]]] = []
    if jobs <= 1:
        for number, batch in enumerate(batches, start=1):
            results.extend(_run_batch(batch))
            logger.info(f"   Lote {number}/{len(batches)} ({len(results)}/{runs} ejecuciones)")
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for number, chunk in enumerate(pool.map(_run_batch, batches), start=1):
            results.extend(chunk)
            logger.info(f"   Lote {number}/{len(batches)} ({len(results)}/{runs} ejecuciones)")
    return results


def estimate_probability(
    params: SystemParams,
    pred: Predicate,
    horizon: float,
    alpha: float,
    epsilon: float,
    seed: int,
    jobs: int = JOBS,
) -> Interval:
    """
    Estima Pr[<=horizon](<> pred) con el plan fijo de Chernoff-Hoeffding.

    Returns:
        Interval [max(0, p'-ε), min(1, p'+ε)] con confianza 1-α
    """
    runs = chernoff_runs(alpha, epsilon)
    logger.info(f"Estimando Pr[<={horizon}](<> {pred}) con {runs} ejecuciones (seed={seed})")
    inicio = time.perf_counter()
    results = _run_many(params, horizon, seed, runs, pred, None, jobs)
    verdicts = np.array([bool(s) for s, _ in results], dtype=bool)
    p_hat = float(verdicts.mean())
    interval = Interval(
        p_hat=p_hat,
        lo=max(0.0, p_hat - epsilon),
        hi=min(1.0, p_hat + epsilon),
        confidence=1 - alpha,
        runs=runs,
        seed=seed,
        epsilon=epsilon,
        verdicts=verdicts,
    )
    logger.info(
        f"✓ p'={p_hat:.6f} intervalo=[{interval.lo:.6f},{interval.hi:.6f}] "
        f"en {time.perf_counter() - inicio:.1f}s"
    )
    return interval


def estimate_expected_max(
    params: SystemParams,
    expr: Expression,
    horizon: float,
    runs: int,
    seed: int,
    jobs: int = JOBS,
) -> ExpectedMaxResult:
    """
    Media del máximo de expr por ejecución con intervalo t de Student al 95%.

    Raises:
        DomainError: Si runs < 2
    """
    if runs < 2:
        raise DomainError(f"se necesitan al menos 2 ejecuciones: {runs}")
    logger.info(f"Estimando E[<={horizon};{runs}](max: {expr}) (seed={seed})")
    results = _run_many(params, horizon, seed, runs, None, expr, jobs)
    values = np.array([m for _, m in results], dtype=float)
    mean = float(values.mean())
    std = float(values.std(ddof=1))
    half = float(stats.t.ppf(0.975, runs - 1) * std / math.sqrt(runs)) if std > 0 else 0.0
    logger.info(f"✓ media={mean:.4f} ± {half:.4f}")
    return ExpectedMaxResult(mean=mean, ci95=half, runs=runs, seed=seed, values=values)


def run_smc_query(
    params: SystemParams,
    query,
    alpha: float,
    epsilon: float,
    seed: int,
    runs: Optional[int] = None,
    jobs: int = JOBS,
):
    """Despacha una query Pr[...] o E[...] a su estimador."""
    if isinstance(query, Probability):
        return estimate_probability(params, query.pred, query.horizon, alpha, epsilon, seed, jobs)
    if isinstance(query, ExpectedMax):
        return estimate_expected_max(params, query.expr, query.horizon, runs or query.runs, seed, jobs)
    raise DomainError(f"query no estadística: {query}")


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    "RNG_ALGORITHM",
    "StochasticRun",
    "Interval",
    "ExpectedMaxResult",
    "chernoff_runs",
    "run_rng",
    "simulate_run",
    "estimate_probability",
    "estimate_expected_max",
    "run_smc_query",
]
