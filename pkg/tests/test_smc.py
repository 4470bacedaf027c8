"""Tests de la simulación estocástica y de los estimadores."""

import numpy as np
import pytest

from src.core.errors import DomainError
from src.model.params import load_params
from src.model.trace import replay_trace
from src.model.queries import ExpectedMax, Probability, parse_expression, parse_predicate, parse_query
from src.verification.smc import (
    chernoff_runs,
    estimate_expected_max,
    estimate_probability,
    run_rng,
    run_smc_query,
    simulate_run,
)


@pytest.mark.parametrize(
    "alpha,epsilon,esperado",
    [(0.05, 0.01, 18445), (0.05, 0.005, 73778), (0.5, 0.2, 18)],
)
def test_cota_de_chernoff(alpha, epsilon, esperado):
    assert chernoff_runs(alpha, epsilon) == esperado


@pytest.mark.parametrize("alpha,epsilon", [(0, 0.1), (1, 0.1), (0.05, 0), (0.05, 1.5), (-0.1, 0.1)])
def test_cota_fuera_de_dominio(alpha, epsilon):
    with pytest.raises(DomainError):
        chernoff_runs(alpha, epsilon)


def test_flujos_independientes_por_ejecucion():
    a = run_rng(7, 0).random(4)
    assert np.array_equal(a, run_rng(7, 0).random(4))
    assert not np.array_equal(a, run_rng(7, 1).random(4))
    assert not np.array_equal(a, run_rng(8, 0).random(4))


def test_misma_semilla_misma_ejecucion(hacer_params):
    params = hacer_params(timeout=100_000)
    a = simulate_run(params, 200.0, seed=42, run_index=3)
    b = simulate_run(params, 200.0, seed=42, run_index=3)
    assert a.events == b.events
    assert a.end_reason == b.end_reason
    assert a.trace.states == b.trace.states


def test_la_traza_simulada_se_reproduce(hacer_params):
    # Con un timeout tan largo los temporizadores nunca disparan
    params = hacer_params(timeout=100_000)
    run = simulate_run(params, 200.0, seed=1)
    assert run.end_reason in ("terminated", "horizon")
    assert len(run.trace.states) == run.events + 1
    assert replay_trace(params, run.trace).final == run.trace.final


def test_tiempos_no_decrecientes(hacer_params):
    run = simulate_run(hacer_params(timeout=100_000), 200.0, seed=5)
    tiempos = [step.time for step in run.trace.steps]
    assert tiempos == sorted(tiempos)
    assert all(t <= 200.0 for t in tiempos)


def test_horizonte_no_positivo(hacer_params):
    with pytest.raises(DomainError):
        simulate_run(hacer_params(), 0, seed=1)


def test_timeout_termina_la_ejecucion(hacer_params):
    params = hacer_params(timeout_mode="nondet", timeout="1", write_rate="0.01", read_rate="0.01")
    run = simulate_run(params, 10_000.0, seed=3)
    assert run.end_reason == "timeout"
    assert run.trace.final.any_timeout()
    assert replay_trace(params, run.trace).final == run.trace.final


def test_sin_modo_timeout_no_hay_temporizadores(hacer_params):
    params = hacer_params(timeout="1", write_rate="0.01", read_rate="0.01")
    run = simulate_run(params, 10_000.0, seed=3)
    assert run.end_reason != "timeout"
    assert not any(t.process.kind == "st" for t in run.trace.instances)


@pytest.mark.parametrize("seed,indice", [(0, 0), (7, 3), (11, 42)])
def test_las_ejecuciones_de_smc_se_reproducen(seed, indice):
    params = load_params("paper-smc")
    run = simulate_run(params, 500.0, seed=seed, run_index=indice)
    reproducida = replay_trace(params, run.trace)
    assert reproducida.states == run.trace.states


def test_terminacion_con_parada_segura(hacer_params):
    params = hacer_params(p_action="0", p_stop="1")
    run = simulate_run(params, 10_000.0, seed=0, pred=parse_predicate("allTerminated()"))
    assert run.end_reason == "terminated"
    assert run.satisfied is True


def test_estimacion_de_probabilidad(hacer_params):
    params = hacer_params(p_action="0", p_stop="1")
    intervalo = estimate_probability(params, parse_predicate("allTerminated()"), 10_000.0, 0.5, 0.2, seed=1, jobs=1)
    assert intervalo.runs == 18
    assert intervalo.p_hat == 1.0
    assert (intervalo.lo, intervalo.hi) == (0.8, 1.0)
    assert intervalo.confidence == 0.5
    assert intervalo.verdicts.shape == (18,)
    registro = intervalo.to_record()
    assert registro["interval"] == "[0.800000,1.000000]"
    assert registro["rng"] == "numpy.random.Philox"


def test_estimacion_de_evento_imposible(hacer_params):
    params = hacer_params(timeout=100_000)
    intervalo = estimate_probability(params, parse_predicate("anyTimeout()"), 100.0, 0.5, 0.2, seed=1, jobs=1)
    assert intervalo.p_hat == 0.0
    assert intervalo.lo == 0.0


def test_estimacion_reproducible(hacer_params):
    params = hacer_params()
    pred = parse_predicate("orc.Stop")
    a = estimate_probability(params, pred, 20.0, 0.5, 0.2, seed=9, jobs=1)
    b = estimate_probability(params, pred, 20.0, 0.5, 0.2, seed=9, jobs=1)
    assert np.array_equal(a.verdicts, b.verdicts)


@pytest.mark.slow
def test_paralelo_igual_a_secuencial(hacer_params):
    params = hacer_params()
    pred = parse_predicate("orc.Stop")
    a = estimate_probability(params, pred, 20.0, 0.5, 0.2, seed=9, jobs=1)
    b = estimate_probability(params, pred, 20.0, 0.5, 0.2, seed=9, jobs=2)
    assert np.array_equal(a.verdicts, b.verdicts)


def test_maximo_esperado(hacer_params):
    params = hacer_params(p_action="0", p_stop="1")
    resultado = estimate_expected_max(params, parse_expression("occ(0)"), 10_000.0, runs=5, seed=2, jobs=1)
    # El chequeo encola siempre tres mensajes en el buffer del servicio 0
    assert resultado.values.shape == (5,)
    assert np.all(resultado.values == 3)
    assert resultado.mean == 3.0
    assert resultado.ci95 == 0.0


def test_maximo_esperado_requiere_dos_ejecuciones(hacer_params):
    with pytest.raises(DomainError):
        estimate_expected_max(hacer_params(), parse_expression("occ(0)"), 10.0, runs=1, seed=0)


def test_despacho_de_queries_estadisticas(hacer_params):
    params = hacer_params(p_action="0", p_stop="1")
    query = parse_query("Pr[<=10000](<> allTerminated())")
    assert isinstance(query, Probability)
    assert run_smc_query(params, query, 0.5, 0.2, seed=1, jobs=1).p_hat == 1.0
    query = parse_query("E[<=10000;4](max: occ(1))")
    assert isinstance(query, ExpectedMax)
    assert run_smc_query(params, query, 0.5, 0.2, seed=1, jobs=1).runs == 4


def test_despacho_rechaza_queries_simbolicas(hacer_params):
    with pytest.raises(DomainError):
        run_smc_query(hacer_params(), parse_query("A[] true"), 0.5, 0.2, seed=1)


# ============================================================================
# REPRODUCCIÓN CUALITATIVA (preset de estimación, horizonte 500)
# ============================================================================

@pytest.mark.slow
@pytest.mark.parametrize("q,lleno", [(3, True), (5, False)])
def test_probabilidad_de_buffer_lleno(q, lleno):
    params = load_params("paper-smc", {"queue_size": str(q)})
    intervalo = estimate_probability(params, parse_predicate("exists i: isFull(i)"), 500.0, 0.05, 0.05, seed=7)
    assert intervalo.runs == 738
    if lleno:
        assert intervalo.lo >= 0.9
    else:
        assert intervalo.hi <= 0.05


@pytest.mark.slow
def test_probabilidad_de_timeout():
    intervalo = estimate_probability(load_params("paper-smc"), parse_predicate("anyTimeout()"), 500.0, 0.05, 0.05, seed=7)
    assert intervalo.p_hat <= 0.05


@pytest.mark.slow
def test_probabilidad_de_terminacion():
    intervalo = estimate_probability(
        load_params("paper-smc"), parse_predicate("allTerminated()"), 500.0, 0.05, 0.05, seed=7
    )
    assert intervalo.p_hat >= 0.95
