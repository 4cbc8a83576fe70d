"""
This is the API documentation of decmon.

### Submodules

- **automata**: Monitor automata of LTL formulas, monitorability check and the split protocol automaton
- **central**: The centralized baseline monitor
- **constants**: Time lattice and default campaign values
- **core**: High-level functions that are used by the subcommands. If you want to monitor traces from a Python script
(without spawning a subprocess), this might be the module that you want to use.
- **experiments**: Property families, outcome buckets and the message-efficiency tables of `decmon bench`
- **intervals**: Integer times and finite unions of half-open intervals
- **ltl**: Formulas, verdicts, atomic propositions and the parser
- **protocol**: Messages and the per-process monitor of the decentralized protocol
- **simulation**: Discrete-event simulation of a run, the offline oracle and trace files
- **ui**: Everything that is used for interaction with the user: the command line interface and the configuration.
"""
