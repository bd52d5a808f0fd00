"""HTTP/1.1 shell around the gateway, plus the server CLI."""

from __future__ import annotations

import argparse
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .gateway import AppConfig, Gateway, build_app

__all__ = ["serve", "start_background", "main"]


def _make_handler(gateway: Gateway, quiet: bool):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _dispatch(self, method: str) -> None:
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            headers = {k.lower(): v for k, v in self.headers.items()}
            response = gateway.handle(method, self.path, headers, body)
            self.send_response(response.status)
            self.send_header("Content-Type", response.content_type)
            self.send_header("Content-Length", str(len(response.body)))
            self.end_headers()
            self.wfile.write(response.body)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

        def do_PUT(self):
            self._dispatch("PUT")

        def do_DELETE(self):
            self._dispatch("DELETE")

        def log_message(self, fmt, *args):
            if not quiet:
                super().log_message(fmt, *args)

    return Handler


def serve(gateway: Gateway, host: str, port: int, quiet: bool = False) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _make_handler(gateway, quiet))
    server.daemon_threads = True
    return server


def start_background(gateway: Gateway, host: str = "127.0.0.1", port: int = 0):
    """Run the server on a daemon thread; returns (server, base_url)."""
    server = serve(gateway, host, port, quiet=True)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://{host}:{server.server_address[1]}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="consentchain-server",
        description="Consent-management REST API over a replicated permission ledger.",
    )
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--data-dir", type=Path, default=Path("data"))
    parser.add_argument("--peers", type=int, default=4)
    parser.add_argument("--quorum", type=int, default=None,
                        help="endorsement quorum (default: majority of peers)")
    parser.add_argument("--block-timeout-ms", type=int, default=250)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--static-dir", type=Path, default=None,
                        help="directory of web UI assets to serve at /")
    parser.add_argument("--password-iterations", type=int, default=100_000)
    args = parser.parse_args(argv)

    static_dir = args.static_dir
    if static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = bundled if bundled.is_dir() else None

    gateway = build_app(
        AppConfig(
            data_dir=args.data_dir,
            peers=args.peers,
            quorum=args.quorum,
            block_timeout_ms=args.block_timeout_ms,
            seed=args.seed,
            static_dir=static_dir,
            password_iterations=args.password_iterations,
        )
    )
    server = serve(gateway, args.host, args.port)
    bound_port = server.server_address[1]
    print(f"listening on http://{args.host}:{bound_port} data={args.data_dir}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
