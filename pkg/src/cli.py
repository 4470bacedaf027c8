"""
CLI para OrquestaVerif - Verificación y testing de orquestaciones

Comandos disponibles:
- verify: Model checking exhaustivo de queries A[], E<>, E[], A<> y -->
- smc: Estimación estadística Pr[<=T](<> p) y E[<=T;K](max: expr)
- simulate: Una ejecución estocástica con su traza
- gentest: Testigo de una steps-query y test abstracto
- concretize: Sustituye placeholders con un archivo de bindings
- orchestrate: Orquestador de referencia contra servicios en vivo
- serve: Servicio de referencia con un comportamiento
- conformance: Ejecuta un script de conformidad

Códigos de salida: 0 se cumple/aprobado, 1 falla, 2 desconocido/recursos,
3 error de uso.

Autor: OrquestaVerif Team
Fecha: 2026-10-16
"""

import argparse
import asyncio
import dataclasses
import logging
import shlex
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from slugify import slugify

from src.core import CONNECT_RETRY, JOBS, SEARCH, SEED, SOCKET_DEADLINE, STATE_CAP, artifacts_path, configurar_logging, data_path
from src.core.errors import HandshakeMismatch, InvalidParams, OrquestaError, QuerySyntaxError
from src.model.params import SystemParams, load_params, parse_overrides
from src.model.protocol import Configuration
from src.model.queries import ExpectedMax, Probability, parse_query, parse_steps_query, read_query_file
from src.model.trace import format_trace
from src.runtime.conformance import load_script, run_conformance
from src.runtime.contract import load_contract
from src.runtime.orchestrator import ChoicePolicy, Endpoint, run_orchestrator
from src.runtime.service import load_behaviour, run_service
from src.testgen.annotations import load_annotations
from src.testgen.concretize import concretize, load_bindings
from src.testgen.generator import AbstractTest, Scope, WitnessSearch, augment_coverage, edge_coverage, emit_abstract_test, find_witness
from src.verification.checker import SearchOrder, VerdictStatus, check, write_evidence
from src.verification.smc import run_smc_query, simulate_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILS = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3

_EXIT_BY_VERDICT = {
    VerdictStatus.HOLDS: EXIT_OK,
    VerdictStatus.FAILS: EXIT_FAILS,
    VerdictStatus.UNKNOWN: EXIT_UNKNOWN,
}


# ============================================================================
# SALIDA
# ============================================================================

def _banner(titulo: str) -> None:
    print("\n" + "="*80)
    print(titulo)
    print("="*80 + "\n")


def _emit(record: Dict[str, object]) -> None:
    """Registro de máquina: una línea @clave=valor por campo."""
    for key, value in record.items():
        print(f"@{key}={value}")


def _cargar_params(args) -> SystemParams:
    source = args.params or args.preset
    if source is None:
        raise InvalidParams("se requiere --params o --preset")
    params = load_params(source, parse_overrides(args.set or []))
    _emit({"params": params.digest()})
    return params


def _leer_queries(texto: str) -> List[str]:
    """`@archivo` o `@nombre` (data/queries/<nombre>.q) para varias queries; si no, una sola."""
    if not texto.startswith("@"):
        return [texto]
    path = Path(texto[1:])
    if not path.exists():
        path = data_path("queries", f"{texto[1:]}.q")
    if not path.exists():
        raise QuerySyntaxError(f"no existe el archivo de queries {texto[1:]!r}")
    return read_query_file(path)


def _resolver(source: str, folder: str, suffix: str) -> Path:
    path = Path(source)
    if not path.exists():
        path = data_path(folder, f"{source}{suffix}")
    if not path.exists():
        raise FileNotFoundError(f"no existe {source!r} (ni {path})")
    return path


# ============================================================================
# COMANDOS: MODELO
# ============================================================================

async def comando_verify(args) -> int:
    """
    Verifica una o varias queries; el peor veredicto decide el código de salida.

    Args:
        args: Argumentos de línea de comandos
    """
    _banner("MODEL CHECKING")
    params = _cargar_params(args)
    queries = [(texto, parse_query(texto)) for texto in _leer_queries(args.query)]
    for _, q in queries:
        if isinstance(q, (Probability, ExpectedMax)):
            raise QuerySyntaxError(f"{q} es una query estadística: use el comando smc")

    peor = EXIT_OK
    for texto, q in queries:
        verdict = check(params, q, SearchOrder(args.search), args.state_cap)
        # Eco de la query tal como se escribió
        verdict.query = texto.strip()
        print(f"  {verdict.status.value:8s} {verdict.query}")
        _emit(verdict.to_record())
        if verdict.evidence is not None and not verdict.holds:
            path = write_evidence(verdict, Path(args.out) if args.out else None)
            _emit({"artifact": path})
        peor = max(peor, _EXIT_BY_VERDICT[verdict.status])

    print("\n" + "="*80 + "\n")
    return peor


async def comando_smc(args) -> int:
    """Estimación estadística con el plan fijo de Chernoff-Hoeffding."""
    _banner(f"SMC - alpha={args.alpha} epsilon={args.epsilon} seed={args.seed}")
    params = _cargar_params(args)
    for text in _leer_queries(args.query):
        query = parse_query(text)
        if not isinstance(query, (Probability, ExpectedMax)):
            raise QuerySyntaxError(f"{query} no es estadística: use el comando verify")
        if args.horizon is not None:
            query = dataclasses.replace(query, horizon=args.horizon)
        result = run_smc_query(params, query, args.alpha, args.epsilon, args.seed, args.runs, args.jobs)
        mostrada = text.strip() if args.horizon is None else str(query)
        print(f"  {mostrada}")
        _emit({"query": mostrada, **result.to_record()})
    print("\n" + "="*80 + "\n")
    return EXIT_OK


async def comando_simulate(args) -> int:
    """Una ejecución estocástica; la traza queda en artefactos."""
    _banner(f"SIMULACIÓN - horizonte {args.horizon}, seed {args.seed}")
    params = _cargar_params(args)
    run = simulate_run(params, args.horizon, args.seed, args.run_index, keep_trace=True)
    path = Path(args.out) if args.out else artifacts_path(
        f"simulate-{params.digest()}-{args.seed}-{args.run_index}.trace"
    )
    header = [f"seed: {args.seed}", f"run: {args.run_index}", f"end: {run.end_reason}"]
    path.write_text(format_trace(run.trace, header), encoding="utf-8")
    print(f"  Fin: {run.end_reason} en t={run.end_time:.3f} ({run.events} eventos)")
    _emit({
        "end_reason": run.end_reason,
        "end_time": f"{run.end_time:.4f}",
        "events": run.events,
        "artifact": path,
    })
    return EXIT_OK


# ============================================================================
# COMANDOS: GENERACIÓN DE TESTS
# ============================================================================

def _imprimir_cobertura(traces) -> None:
    print("\n  Cobertura de aristas:")
    for template, (fired, declared) in edge_coverage(traces).items():
        print(f"    {template:14s} {len(fired & declared):3d}/{len(declared):3d}")
        _emit({f"coverage_{template}": f"{len(fired & declared)}/{len(declared)}"})


async def comando_gentest(args) -> int:
    """
    Busca un testigo de la steps-query y vuelca el test abstracto.

    Escribe <out>/<slug>.abstract y <out>/<slug>.trace.
    """
    _banner("GENERACIÓN DE TEST ABSTRACTO")
    params = _cargar_params(args)
    steps_path = _resolver(args.steps_query, "steps", ".steps")
    constraints = parse_steps_query(steps_path.read_text(encoding="utf-8"))
    table = load_annotations(args.annotations)
    scope = Scope.parse(args.scope)

    trace = find_witness(
        params, constraints, WitnessSearch(args.search), args.depth_cap, args.seed, args.state_cap
    )
    test = emit_abstract_test(trace, table, scope)

    out = Path(args.out) if args.out else artifacts_path()
    out.mkdir(parents=True, exist_ok=True)
    slug = slugify(steps_path.stem) or "test"
    header = [f"steps-query: {steps_path.name}", f"params: {params.digest()}", f"search: {args.search}"]
    (out / f"{slug}.abstract").write_text(test.to_text(), encoding="utf-8")
    (out / f"{slug}.trace").write_text(format_trace(trace, header), encoding="utf-8")
    print(f"  Testigo: {len(trace)} pasos, test: {len(test)} líneas, {len(test.placeholders)} placeholders")
    _emit({
        "witness_len": len(trace),
        "lines": len(test),
        "placeholders": len(test.placeholders),
        "artifact": out / f"{slug}.abstract",
    })

    traces = [trace]
    if args.augment:
        extra = augment_coverage(params, traces, args.augment, args.seed)
        for k, t in enumerate(extra):
            (out / f"{slug}-cov{k}.trace").write_text(format_trace(t, [f"coverage: {k}"]), encoding="utf-8")
            (out / f"{slug}-cov{k}.abstract").write_text(emit_abstract_test(t, table, scope).to_text(), encoding="utf-8")
        traces.extend(extra)
        _emit({"augmented": len(extra)})
    if args.coverage or args.augment:
        _imprimir_cobertura(traces)
    return EXIT_OK


async def comando_concretize(args) -> int:
    """Concretiza un test abstracto en un script de conformidad."""
    _banner("CONCRETIZACIÓN")
    test = AbstractTest.from_text(Path(args.test).read_text(encoding="utf-8"))
    bindings = load_bindings(args.bindings)
    script = concretize(test, bindings)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(script.to_text(), encoding="utf-8")
    print(f"  {len(script)} comandos en {len(script.endpoints)} endpoints -> {out}")
    _emit({"commands": len(script), "endpoints": ",".join(script.endpoints), "artifact": out})
    return EXIT_OK


# ============================================================================
# COMANDOS: RUNTIME
# ============================================================================

async def comando_orchestrate(args) -> int:
    """Orquesta servicios en vivo siguiendo un contrato."""
    config = Configuration.parse(args.config)
    _banner(f"ORQUESTACIÓN {config} - {args.contract}")
    contract = load_contract(args.contract)
    endpoints = [Endpoint.parse(e) for e in args.endpoints]
    policy = ChoicePolicy.parse(args.policy, args.seed)
    try:
        report = await run_orchestrator(
            contract, endpoints, config, policy, args.seed, args.deadline, args.connect_window
        )
    except HandshakeMismatch as e:
        print(f"  ✗ Chequeo de compatibilidad rechazado por svc{e.endpoint}")
        _emit({"handshake": "ERROR", "endpoint": e.endpoint})
        return EXIT_FAILS
    print(f"  Etiquetas: {' '.join(report.labels) or '-'}")
    _emit(report.to_record())
    return EXIT_OK


async def comando_serve(args) -> int:
    """Atiende una sesión de orquestación con un comportamiento dado."""
    config = Configuration.parse(args.config)
    _banner(f"SERVICIO {config} - puerto {args.port}")
    behaviour = load_behaviour(args.behaviour)
    report = await run_service(
        args.port,
        behaviour,
        config,
        host=args.host,
        deadline=args.deadline,
        accept_deadline=args.accept_deadline,
        connect_window=args.connect_window,
    )
    print(f"  Estado: {report.status} ({len(report.transcript)} mensajes)")
    _emit(report.to_record())
    return EXIT_OK if report.status == "terminated" else EXIT_FAILS


async def comando_conformance(args) -> int:
    """Ejecuta un script de conformidad contra pares en vivo."""
    _banner(f"CONFORMIDAD - {args.script}")
    script = load_script(args.script)
    result = await run_conformance(script, args.deadline, args.host)
    if result.passed:
        print(f"  ✓ Aprobado: {result.commands_run} comandos")
    else:
        print(f"  ✗ Falla en {result.endpoint}[{result.index}]: {result.command}")
        print(f"    observado: {result.observed}")
        print(f"    esperado:  {result.expected}")
    _emit(result.to_record())
    return EXIT_OK if result.passed else EXIT_FAILS


# ============================================================================
# CLI PRINCIPAL
# ============================================================================

class _Parser(argparse.ArgumentParser):
    """argparse con código de salida 3 para errores de uso."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_params(parser: argparse.ArgumentParser) -> None:
    grupo = parser.add_mutually_exclusive_group()
    grupo.add_argument('--params', type=str, help='Archivo .params')
    grupo.add_argument('--preset', type=str, help='Nombre de preset en data/presets')
    parser.add_argument('--set', action='append', metavar='CLAVE=VALOR', help='Override de parámetro (repetible)')
    parser.add_argument('--jobs', type=int, default=JOBS, help=f'Procesos de trabajo (default: {JOBS})')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="python -m src.cli",
        description="OrquestaVerif - Verificación y testing de protocolos de orquestación",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos de uso:

  # Ausencia de deadlock en el preset pequeño
  python -m src.cli verify --preset desk-small --query "A[] (!deadlock || allTerminated())"

  # Todas las queries de un archivo
  python -m src.cli verify --preset desk-small --query @orphan

  # Probabilidad de buffer lleno
  python -m src.cli smc --preset smc-default --query "Pr[<=500](<> exists i: isFull(i))" --alpha 0.05 --epsilon 0.01

  # Test abstracto del café y su concretización
  python -m src.cli gentest --preset cafe-dict-cent --steps-query dict-cent --out artifacts
  python -m src.cli concretize --test artifacts/dict-cent.abstract --bindings cafe-dict-cent --out artifacts/dict-cent.script
        """
    )
    parser.add_argument('--log-level', type=str, default=None, help='Nivel de log (default: ORQUESTA_LOG_LEVEL)')
    subparsers = parser.add_subparsers(dest='comando', help='Comandos disponibles')

    # Comando: verify
    p = subparsers.add_parser('verify', help='Model checking exhaustivo')
    _add_params(p)
    p.add_argument('--query', type=str, required=True, help='Query, o @archivo / @nombre para varias')
    p.add_argument('--search', choices=[s.value for s in SearchOrder], default=SEARCH if SEARCH in ('bfs', 'dfs') else 'bfs')
    p.add_argument('--state-cap', type=int, default=STATE_CAP, help=f'Límite de estados (default: {STATE_CAP:,})')
    p.add_argument('--out', type=str, default=None, help='Directorio de evidencias (default: artefactos)')

    # Comando: smc
    p = subparsers.add_parser('smc', help='Model checking estadístico')
    _add_params(p)
    p.add_argument('--query', type=str, required=True, help='Query Pr[...] o E[...], o @archivo')
    p.add_argument('--alpha', type=float, default=0.05, help='1 - confianza (default: 0.05)')
    p.add_argument('--epsilon', type=float, default=0.01, help='Precisión (default: 0.01)')
    p.add_argument('--horizon', type=float, default=None, help='Reemplaza el horizonte de la query')
    p.add_argument('--seed', type=int, default=SEED)
    p.add_argument('--runs', type=int, default=None, help='Ejecuciones para E[...] (default: las de la query)')

    # Comando: simulate
    p = subparsers.add_parser('simulate', help='Una ejecución estocástica')
    _add_params(p)
    p.add_argument('--horizon', type=float, required=True)
    p.add_argument('--seed', type=int, default=SEED)
    p.add_argument('--run-index', type=int, default=0)
    p.add_argument('--out', type=str, default=None, help='Archivo de traza')

    # Comando: gentest
    p = subparsers.add_parser('gentest', help='Genera un test abstracto desde una steps-query')
    _add_params(p)
    p.add_argument('--steps-query', type=str, required=True, help='Archivo .steps o nombre en data/steps')
    p.add_argument('--annotations', type=str, default='curated', help='Tabla de anotaciones (default: curated)')
    p.add_argument('--scope', type=str, default='services', help='all | services | orc | svc0,orc ...')
    p.add_argument('--out', type=str, default=None, help='Directorio de salida (default: artefactos)')
    p.add_argument('--search', choices=[s.value for s in WitnessSearch], default='bfs')
    p.add_argument('--depth-cap', type=int, default=500)
    p.add_argument('--state-cap', type=int, default=STATE_CAP)
    p.add_argument('--seed', type=int, default=SEED)
    p.add_argument('--augment', type=int, default=0, metavar='BUDGET', help='Rondas de aumento de cobertura')
    p.add_argument('--coverage', action='store_true', default=False, help='Muestra la cobertura por plantilla')

    # Comando: concretize
    p = subparsers.add_parser('concretize', help='Sustituye placeholders de un test abstracto')
    p.add_argument('--test', type=str, required=True)
    p.add_argument('--bindings', type=str, required=True, help='Archivo .bind o nombre en data/bindings')
    p.add_argument('--out', type=str, required=True)

    # Comando: orchestrate
    p = subparsers.add_parser('orchestrate', help='Orquestador de referencia')
    p.add_argument('--contract', type=str, required=True, help='Archivo .contract o nombre en data/contracts')
    p.add_argument('--config', type=str, required=True, help='DICT/CENT, MAJ/DIST, ...')
    p.add_argument('--endpoints', nargs='+', required=True, metavar='HOST:PUERTO')
    p.add_argument('--policy', type=str, default='uniform', help="'uniform' o 'scripted:<l1>|<l2>'")
    p.add_argument('--seed', type=int, default=SEED)
    p.add_argument('--deadline', type=float, default=SOCKET_DEADLINE)
    p.add_argument('--connect-window', type=float, default=CONNECT_RETRY)

    # Comando: serve
    p = subparsers.add_parser('serve', help='Servicio de referencia')
    p.add_argument('--port', type=int, required=True)
    p.add_argument('--behaviour', type=str, required=True, help='Archivo .beh o nombre en data/behaviours')
    p.add_argument('--config', type=str, required=True)
    p.add_argument('--host', type=str, default='127.0.0.1')
    p.add_argument('--deadline', type=float, default=SOCKET_DEADLINE)
    p.add_argument('--accept-deadline', type=float, default=None)
    p.add_argument('--connect-window', type=float, default=CONNECT_RETRY)

    # Comando: conformance
    p = subparsers.add_parser('conformance', help='Ejecuta un script de conformidad')
    p.add_argument('--script', type=str, required=True)
    p.add_argument('--deadline', type=float, default=SOCKET_DEADLINE)
    p.add_argument('--host', type=str, default='127.0.0.1')

    return parser


COMANDOS = {
    'verify': comando_verify,
    'smc': comando_smc,
    'simulate': comando_simulate,
    'gentest': comando_gentest,
    'concretize': comando_concretize,
    'orchestrate': comando_orchestrate,
    'serve': comando_serve,
    'conformance': comando_conformance,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Punto de entrada principal del CLI.

    Returns:
        Código de salida (0, 1, 2 o 3)
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    configurar_logging(args.log_level)

    if args.comando is None:
        parser.print_help()
        return EXIT_USAGE

    _emit({"comando": "python -m src.cli " + shlex.join(argv)})
    inicio = time.perf_counter()
    debug = logger.isEnabledFor(logging.DEBUG)
    try:
        code = asyncio.run(COMANDOS[args.comando](args))
    except OrquestaError as e:
        code = e.exit_code
        etiqueta = "Error de uso" if code == EXIT_USAGE else type(e).__name__
        logger.error(f"✗ {etiqueta}: {e}", exc_info=debug)
        if code == EXIT_USAGE:
            print(f"\n✗ Error: {e}\n")
    except (ValueError, OSError) as e:
        logger.error(f"✗ Error de uso: {e}", exc_info=debug)
        print(f"\n✗ Error: {e}\n")
        code = EXIT_USAGE
    _emit({"exit": code, "wall_time": f"{time.perf_counter() - inicio:.3f}"})
    return code


if __name__ == '__main__':
    sys.exit(main())
