"""
Machine guideline generation against a local stub endpoint
==========================================================

Generation normally talks to an OpenAI-compatible chat endpoint. This demo
starts a tiny local server that answers with canned guideline JSON so the
whole flow runs offline; point EndpointConfig at a real base URL to do it
for real. Every request/response pair lands in a content-addressed cache,
so reruns replay from disk without any HTTP traffic.
"""

import json
import os
import re
import tempfile
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources

from evex.guidelines import consolidate, generate, save_store, select_exemplars
from evex.llmclient import EndpointConfig, LLMClient
from evex.corpus import ingest
from evex.ontology import load_ontology

HERE = os.path.dirname(os.path.abspath(__file__))

ont = load_ontology(str(resources.files("evex").joinpath("data/ontologies/ace05.json")))
split = ingest(os.path.join(HERE, "data", "sentences.jsonl"), ont, name="demo")


def canned_reply(body):
    """Produce a deterministic, well-formed guideline payload for whichever
    event type the prompt asks about."""
    text = " ".join(m["content"] for m in body["messages"])
    m = re.search(r"guidelines for the event type (\w+)", text)
    if m:  # generation: five definitions per item
        e = ont.get(m.group(1))
        return json.dumps({
            "Event Definition": [
                f"Canned definition {i + 1} for the {e.name} event." for i in range(5)
            ],
            "Arguments Definitions": {
                r: [f"Canned definition {i + 1} for {r}." for i in range(5)]
                for r in e.role_names
            },
        })
    m = re.search(r"Event Type: prompt_(\w+)\(", text)
    e = ont.get(m.group(1))  # consolidation: one merged definition per item
    return json.dumps({
        "Event Definition": f"Merged definition for the {e.name} event.",
        "Arguments Definitions": {
            "mention": "The text span that triggers the event.",
            **{r: f"Merged definition for {r}." for r in e.role_names},
        },
    })


class Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        payload = json.dumps(
            {"choices": [{"message": {"content": canned_reply(body)}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
threading.Thread(target=server.serve_forever, daemon=True).start()
base_url = f"http://127.0.0.1:{server.server_port}"
print("stub endpoint listening at", base_url)

with tempfile.TemporaryDirectory() as tmp:
    client = LLMClient(
        cfg=EndpointConfig(base_url=base_url, model_name="demo-model"),
        cache_dir=os.path.join(tmp, "cache"),
    )

    # exemplars: up to 10 argument-rich positives, and for the PN variant
    # 15 negatives drawn from instances of other event types
    bundle = select_exemplars(split, ont, "Meet", "random", seed=0)
    print(f"\nMeet exemplars: {len(bundle.positives)} positive(s), "
          f"{len(bundle.negatives)} negative(s)")

    gs = generate(ont.get("Meet"), bundle, client)
    print(f"generated variant {gs.variant!r}: "
          f"{len(gs.event_definitions)} event definitions")
    print("  first:", gs.event_definitions[0])

    merged = consolidate(gs, ont.get("Meet"), client)
    print(f"consolidated variant {merged.variant!r}: "
          f"{len(merged.event_definitions)} event definition")
    print("  it reads:", merged.event_definitions[0])

    store_path = os.path.join(tmp, "meet-pn.json")
    save_store({"Meet": gs}, store_path)
    print("\nstore written to", store_path)
    print("cache transcripts:", len(os.listdir(os.path.join(tmp, "cache"))))

server.shutdown()
