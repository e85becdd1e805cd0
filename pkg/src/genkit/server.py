"""Read-only HTTP JSON API over a directory of trajectory files.

The store scans ``*.traj.jsonl`` at startup and again on POST /api/refresh.
Trajectories are immutable while served, so metric and projection payloads
are computed once per id and cached; repeated requests return identical
bytes. CORS is open so the explorer can be served from any origin.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Dict, Optional

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import trajectory as tj


class TrajectoryStore:
    """Single-writer (refresh) / many-reader view of a trajectory directory."""

    def __init__(self, root):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"store directory {self.root} does not exist")
        self._lock = threading.Lock()
        self._trajectories: Dict[str, tj.Trajectory] = {}
        self._metric_cache: Dict[str, dict] = {}
        self._projection_cache: Dict[str, dict] = {}
        self.refresh()

    def refresh(self) -> int:
        found: Dict[str, tj.Trajectory] = {}
        for path in sorted(self.root.glob("*.traj.jsonl")):
            traj = tj.load(path)
            found[traj.id] = traj
        with self._lock:
            self._trajectories = found
            self._metric_cache.clear()
            self._projection_cache.clear()
        return len(found)

    def ids(self):
        with self._lock:
            return sorted(self._trajectories)

    def get(self, traj_id: str) -> Optional[tj.Trajectory]:
        with self._lock:
            return self._trajectories.get(traj_id)

    def summary(self, traj: tj.Trajectory) -> dict:
        return {
            "id": traj.id,
            "kind": traj.kind,
            "steps": len(traj.steps),
            "created_at": traj.created_at,
        }

    def detail(self, traj: tj.Trajectory) -> dict:
        doc = self.summary(traj)
        doc.update({
            "shape": list(traj.shape),
            "seed": traj.seed,
            "condition": traj.condition,
        })
        return doc

    def metrics(self, traj: tj.Trajectory) -> dict:
        with self._lock:
            cached = self._metric_cache.get(traj.id)
        if cached is not None:
            return cached
        reference = traj.steps[-1].state
        series = tj.compute_metrics(traj, reference=reference)
        doc = {"series": [
            {"name": s.name, "values": [float(v) for v in s.values]} for s in series
        ]}
        with self._lock:
            self._metric_cache[traj.id] = doc
        return doc

    def projection(self, traj: tj.Trajectory) -> dict:
        with self._lock:
            cached = self._projection_cache.get(traj.id)
        if cached is not None:
            return cached
        if len(traj.steps) < 2:
            doc = {"coords": [[0.0, 0.0] for _ in traj.steps],
                   "explained_variance": [0.0, 0.0]}
        else:
            proj = tj.project_steps(traj)
            doc = {"coords": [[float(a), float(b)] for a, b in proj.coords],
                   "explained_variance": [float(v) for v in proj.explained_variance]}
        with self._lock:
            self._projection_cache[traj.id] = doc
        return doc


def _not_found(traj_id: str) -> JSONResponse:
    return JSONResponse(status_code=404, content={"error": f"no trajectory {traj_id!r}"})


def create_app(store_dir) -> FastAPI:
    store = TrajectoryStore(store_dir)
    app = FastAPI(title="genkit trajectory service")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.get("/api/trajectories")
    def list_trajectories():
        return [store.summary(store.get(i)) for i in store.ids()]

    @app.get("/api/trajectories/{traj_id}")
    def get_trajectory(traj_id: str):
        traj = store.get(traj_id)
        if traj is None:
            return _not_found(traj_id)
        return store.detail(traj)

    @app.get("/api/trajectories/{traj_id}/steps/{k}")
    def get_step(traj_id: str, k: int):
        traj = store.get(traj_id)
        if traj is None:
            return _not_found(traj_id)
        if not (0 <= k < len(traj.steps)):
            return JSONResponse(status_code=404,
                                content={"error": f"step {k} out of range"})
        return tj._snapshot_to_json(traj.steps[k], traj.kind)

    @app.get("/api/trajectories/{traj_id}/metrics")
    def get_metrics(traj_id: str):
        traj = store.get(traj_id)
        if traj is None:
            return _not_found(traj_id)
        return store.metrics(traj)

    @app.get("/api/trajectories/{traj_id}/projection")
    def get_projection(traj_id: str):
        traj = store.get(traj_id)
        if traj is None:
            return _not_found(traj_id)
        return store.projection(traj)

    @app.post("/api/refresh")
    def refresh():
        return {"trajectories": store.refresh()}

    return app


class ServerHandle:
    """A uvicorn server running in a daemon thread."""

    def __init__(self, server, thread):
        self._server = server
        self._thread = thread

    @classmethod
    def start(cls, store_dir, bind: str = "127.0.0.1:8000") -> "ServerHandle":
        import uvicorn

        host, _, port = bind.partition(":")
        config = uvicorn.Config(create_app(store_dir), host=host or "127.0.0.1",
                                port=int(port or 8000), log_level="warning")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        return cls(server, thread)

    def stop(self, timeout: float = 5.0) -> None:
        self._server.should_exit = True
        self._thread.join(timeout)


def run_blocking(store_dir, bind: str = "127.0.0.1:8000") -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    uvicorn.run(create_app(store_dir), host=host or "127.0.0.1",
                port=int(port or 8000), log_level="info")
