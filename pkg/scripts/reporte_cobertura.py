#!/usr/bin/env python3
"""
Script para reportar testigos y cobertura de aristas de las steps-queries del café.

Uso:
    python scripts/reporte_cobertura.py
    python scripts/reporte_cobertura.py --augment 10
    python scripts/reporte_cobertura.py --escenarios dict-cent maj-dist
"""

import sys
from pathlib import Path

# Agregar directorio raíz al PYTHONPATH
root_dir = Path(__file__).parent.parent
sys.path.insert(0, str(root_dir))

import argparse
import time

from src.core import configurar_logging, data_path
from src.core.errors import OrquestaError
from src.model.params import load_params
from src.model.queries import parse_steps_query
from src.testgen.annotations import load_annotations
from src.testgen.generator import augment_coverage, edge_coverage, emit_abstract_test, find_witness

ESCENARIOS = ["dict-cent", "dict-dist", "maj-cent", "maj-dist"]


def reporte(escenarios: list, augment: int, seed: int):
    """Testigo BFS por escenario y cobertura acumulada por plantilla."""
    table = load_annotations("curated")

    print("="*80)
    print("TESTIGOS DE LAS STEPS-QUERIES")
    print("="*80)
    print()
    print(f"{'Escenario':<12} {'Pasos':>6} {'Líneas':>7} {'Placeholders':>13} {'Tiempo':>9}")
    print("-"*80)

    for slug in escenarios:
        params = load_params(f"cafe-{slug}")
        constraints = parse_steps_query(data_path("steps", f"{slug}.steps").read_text(encoding="utf-8"))
        inicio = time.perf_counter()
        try:
            trace = find_witness(params, constraints)
        except OrquestaError as e:
            print(f"{slug:<12} ✗ {type(e).__name__}: {e}")
            continue
        traces = [trace]
        if augment:
            traces.extend(augment_coverage(params, traces, augment, seed))
        duracion = time.perf_counter() - inicio
        test = emit_abstract_test(trace, table)
        print(f"{slug:<12} {len(trace):>6} {len(test):>7} {len(test.placeholders):>13} {duracion:>8.2f}s")

        for template, (fired, declared) in edge_coverage(traces).items():
            cubiertas = len(fired & declared)
            porcentaje = 100.0 * cubiertas / len(declared) if declared else 0.0
            print(f"    {template:<14} {cubiertas:>3}/{len(declared):<3} ({porcentaje:5.1f}%)")
        if augment:
            print(f"    + {len(traces) - 1} trazas de cobertura")
        print()

    print("="*80)


def main():
    parser = argparse.ArgumentParser(description='Reporte de testigos y cobertura de aristas')
    parser.add_argument('--escenarios', nargs='+', choices=ESCENARIOS, default=ESCENARIOS)
    parser.add_argument('--augment', type=int, default=0, help='Rondas de aumento de cobertura')
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--log-level', type=str, default='WARNING')
    args = parser.parse_args()

    configurar_logging(args.log_level)
    reporte(args.escenarios, args.augment, args.seed)


if __name__ == "__main__":
    main()
