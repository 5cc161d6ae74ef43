"""Record real service responses as UI test fixtures.

Drives one deterministic session (seed 3, budget 7) through the HTTP
layer with a scripted simulated expert, saving the contract, a mid-run
state (open queries + populated trace), the finished state, and the final
trace. Rerunning overwrites the fixtures with identical bytes.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from boap.engine import ComparisonQuery, ObservationQuery
from boap.oracles import ExpertOracle, SimulatedOracle, get_objective
from boap.service.app import create_app

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def answer_payload(state, oracle):
    payload = {"observations": [], "comparisons": []}
    for o in state["open_queries"]["observations"]:
        ans = oracle.observe(ObservationQuery(o["id"], o["eval_index"], tuple(o["x"])))
        payload["observations"].append(
            {"id": o["id"], "value": ans.value, "true_value": ans.true_value}
        )
    for c in state["open_queries"]["comparisons"]:
        q = ComparisonQuery(
            c["id"], c["property_index"], c["property_name"],
            c["left_index"], c["right_index"], tuple(c["left_x"]), tuple(c["right_x"]),
        )
        payload["comparisons"].append({"id": c["id"], "choice": oracle.compare(q).choice})
    return payload


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    obj = get_objective("benchmark1d")
    client = TestClient(create_app(storage_dir=None))
    expert = ExpertOracle(
        property_fns=obj.property_fns, objective_fn=obj.fn, mode="accurate", seed=3
    )
    oracle = SimulatedOracle(obj.fn, expert, run_seed=3)

    (OUT / "contract.json").write_text(
        json.dumps(client.get("/api/v1/contract").json(), indent=2, sort_keys=True) + "\n"
    )
    config = {
        "dim": 1,
        "bounds": [[0.0, 4.0]],
        "n_properties": 2,
        "property_names": ["bulge", "inverse_square"],
        "seed": 3,
        "budget": 7,
        "true_max": obj.true_max_value,
        "hyperopt_maxfev": 15,
    }
    sid = client.post("/api/v1/sessions", json=config).json()["session_id"]

    mid_state = None
    while True:
        state = client.get(f"/api/v1/sessions/{sid}").json()
        if state["phase"] == "finished":
            break
        steps = [r for r in state["trace"] if r["type"] == "step"]
        if mid_state is None and len(steps) >= 1 and state["open_queries"]["comparisons"]:
            mid_state = state
        r = client.post(f"/api/v1/sessions/{sid}/answers", json=answer_payload(state, oracle))
        assert r.status_code == 200, r.text

    assert mid_state is not None
    mid_state["session_id"] = "fixture-session"
    state["session_id"] = "fixture-session"
    (OUT / "state_midrun.json").write_text(json.dumps(mid_state, indent=2, sort_keys=True) + "\n")
    (OUT / "state_finished.json").write_text(json.dumps(state, indent=2, sort_keys=True) + "\n")
    (OUT / "trace_finished.jsonl").write_text(client.get(f"/api/v1/sessions/{sid}/trace").text)
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
