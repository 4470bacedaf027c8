"""Tests del CLI: códigos de salida y artefactos."""

from src.cli import EXIT_FAILS, EXIT_OK, EXIT_UNKNOWN, EXIT_USAGE, main
from src.core import data_path
from src.model.params import load_params
from src.model.queries import parse_steps_query
from src.model.trace import parse_trace, replay

DEADLOCK = "A[] (!deadlock || allTerminated())"


def test_sin_comando(capsys):
    assert main([]) == EXIT_USAGE


def test_opcion_desconocida():
    assert main(["verify", "--no-existe"]) == EXIT_USAGE


def test_verify_se_cumple(capsys):
    assert main(["verify", "--preset", "oracle-dict-cent", "--query", DEADLOCK]) == EXIT_OK
    salida = capsys.readouterr().out
    assert "@verdict=HOLDS" in salida
    assert "@exit=0" in salida
    assert "@params=" in salida


def test_verify_falla_y_guarda_evidencia(tmp_path, capsys):
    codigo = main([
        "verify", "--preset", "oracle-dict-cent", "--set", "queue_size=2",
        "--query", DEADLOCK, "--out", str(tmp_path),
    ])
    assert codigo == EXIT_FAILS
    assert "@verdict=FAILS" in capsys.readouterr().out
    evidencias = list(tmp_path.glob("*.trace"))
    assert len(evidencias) == 1
    assert evidencias[0].read_text(encoding="utf-8").startswith(f"# query: {DEADLOCK}")


def test_verify_sin_recursos():
    assert main(["verify", "--preset", "oracle-dict-cent", "--state-cap", "5", "--query", DEADLOCK]) == EXIT_UNKNOWN


def test_verify_rechaza_queries_estadisticas():
    assert main(["verify", "--preset", "oracle-dict-cent", "--query", "Pr[<=10](<> allTerminated())"]) == EXIT_USAGE


def test_params_invalidos():
    assert main(["verify", "--preset", "no-existe", "--query", DEADLOCK]) == EXIT_USAGE
    assert main(["verify", "--preset", "oracle-dict-cent", "--set", "bogus=1", "--query", DEADLOCK]) == EXIT_USAGE
    assert main(["verify", "--query", DEADLOCK]) == EXIT_USAGE


def test_smc(capsys):
    codigo = main([
        "smc", "--preset", "oracle-dict-cent", "--set", "p_action=0", "--set", "p_stop=1",
        "--query", "Pr[<=10000](<> allTerminated())", "--alpha", "0.5", "--epsilon", "0.2", "--jobs", "1",
    ])
    assert codigo == EXIT_OK
    salida = capsys.readouterr().out
    assert "@p_hat=1.000000" in salida
    assert "@runs=18" in salida
    assert "@query=Pr[<=10000](<> allTerminated())" in salida


def test_smc_rechaza_queries_simbolicas():
    assert main(["smc", "--preset", "oracle-dict-cent", "--query", DEADLOCK]) == EXIT_USAGE


def test_simulate(tmp_path):
    destino = tmp_path / "corrida.trace"
    codigo = main([
        "simulate", "--preset", "oracle-dict-cent", "--horizon", "50",
        "--seed", "3", "--out", str(destino),
    ])
    assert codigo == EXIT_OK
    cabecera = destino.read_text(encoding="utf-8").splitlines()[:2]
    assert cabecera == ["# seed: 3", "# run: 0"]
    entradas = parse_trace(destino.read_text(encoding="utf-8"))
    assert len(replay(load_params("oracle-dict-cent"), entradas)) == len(entradas)


def test_gentest_y_concretize(tmp_path, capsys):
    codigo = main([
        "gentest", "--preset", "cafe-dict-cent", "--steps-query", "dict-cent", "--out", str(tmp_path),
    ])
    assert codigo == EXIT_OK
    assert (tmp_path / "dict-cent.abstract").exists()
    assert (tmp_path / "dict-cent.trace").exists()
    assert "@placeholders=12" in capsys.readouterr().out

    # La traza testigo escrita se reproduce contra el modelo
    restricciones = parse_steps_query(data_path("steps", "dict-cent.steps").read_text(encoding="utf-8"))
    entradas = parse_trace((tmp_path / "dict-cent.trace").read_text(encoding="utf-8"))
    reproducida = replay(load_params("cafe-dict-cent"), entradas, steps_capacity=len(restricciones))
    assert reproducida.final.all_terminated()
    assert reproducida.final.step == len(restricciones)

    script = tmp_path / "dict-cent.script"
    codigo = main([
        "concretize", "--test", str(tmp_path / "dict-cent.abstract"),
        "--bindings", "cafe-dict-cent", "--out", str(script),
    ])
    assert codigo == EXIT_OK
    texto = script.read_text(encoding="utf-8")
    assert "%{" not in texto
    assert 'svc0: ASSERT msg == "euro"' in texto


def test_gentest_sin_testigo(tmp_path):
    steps = tmp_path / "imposible.steps"
    steps.write_text("steps[0] == svc1:ORC_CHECK\n", encoding="utf-8")
    codigo = main([
        "gentest", "--preset", "oracle-dict-cent", "--steps-query", str(steps), "--out", str(tmp_path),
    ])
    assert codigo == EXIT_FAILS
    assert not (tmp_path / "imposible.abstract").exists()


def test_concretize_con_bindings_inexistentes(tmp_path):
    test = tmp_path / "t.abstract"
    test.write_text("svc0: SEND %{x}\n", encoding="utf-8")
    codigo = main(["concretize", "--test", str(test), "--bindings", "no-existe", "--out", str(tmp_path / "t.script")])
    assert codigo == EXIT_USAGE


def test_conformance_con_script_invalido(tmp_path):
    script = tmp_path / "roto.script"
    script.write_text("svc0: JUMP\n", encoding="utf-8")
    assert main(["conformance", "--script", str(script)]) == EXIT_USAGE


def test_orchestrate_sin_servicios(puerto_libre):
    codigo = main([
        "orchestrate", "--contract", "cafe", "--config", "DICT/CENT",
        "--endpoints", f"127.0.0.1:{puerto_libre()}", f"127.0.0.1:{puerto_libre()}",
        "--connect-window", "0.2", "--deadline", "0.2",
    ])
    assert codigo == EXIT_FAILS


def test_orchestrate_con_configuracion_invalida():
    codigo = main([
        "orchestrate", "--contract", "cafe", "--config", "XX/YY", "--endpoints", "127.0.0.1:1", "127.0.0.1:2",
    ])
    assert codigo == EXIT_USAGE


def test_params_por_alias(tmp_path, capsys):
    codigo = main([
        "simulate", "--params", "paper-c1", "--horizon", "5", "--seed", "1",
        "--out", str(tmp_path / "c1.trace"),
    ])
    assert codigo == EXIT_OK
    assert "@params=" in capsys.readouterr().out
