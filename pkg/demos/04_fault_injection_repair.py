"""Fault injection and the error-correction pass.

Injects a transient failure into an API used by a live turn and shows the
repair loop retrying within the same turn; then shows the graceful degradation
under a persistent failure, with the session staying usable afterwards.
"""

from officeagents import Orchestrator, OfficeSimulator

sim = OfficeSimulator("f1", seed=7)
orch = Orchestrator(sim)
session = orch.create_session()

print("-- transient failure, repaired in-turn --")
sim.inject_fault("search_email", "fail_once")
trace = orch.handle_message(session.id, "Search for the emails I received today")
for rep in trace.repairs:
    print(f"  repair: {rep.api_name} errored ({rep.error_code}) -> {rep.action}")
print(f"  final:  {trace.turn.calls[-1][1].status} | reply: {trace.turn.reply}")

print("\n-- persistent failure, graceful reply --")
sim.inject_fault("find_todo", "fail_always")
trace = orch.handle_message(session.id, "find todos")
print(f"  reply: {trace.turn.reply}")

print("\n-- fault cleared, session still usable --")
sim.clear_faults()
trace = orch.handle_message(session.id, "find todos")
print(f"  reply: {trace.turn.reply}")
print(f"  turns in session: {len(orch.get_session(session.id).turns)}")
