"""bora: browser-fronted experiment monitoring.

Server-side ingestion of heterogeneous sensor protocols, an in-memory
recent-sample cache, three comparable video stream transports, a runtime
control API, and a latency benchmark harness.
"""

__version__ = "0.1.0"
