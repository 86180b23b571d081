"""EI gateway: run locally installed command-line tools from remote clients.

The package has three layers:

* server side -- :mod:`ei.registry` (XML app/example configs),
  :mod:`ei.cmdline` (injection-proof argv construction), :mod:`ei.engine`
  (process execution, streams, downloads), :mod:`ei.gateway` /
  :mod:`ei.server` (the JSON-over-HTTP surface);
* the output language -- :mod:`ei.eiout`, the XML vocabulary tools emit to
  drive rich effects in clients;
* client side -- :mod:`ei.cli`, the ``ei`` terminal client.
"""

__version__ = "0.1.0"
