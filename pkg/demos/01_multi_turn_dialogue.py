"""Walk a multi-turn office conversation through the full pipeline.

Shows the schedule workflow end to end: create a meeting, then move its start
time with an elliptical follow-up that resolves against session memory, then
check a colleague's availability. Prints the per-turn trace: relatedness,
rewritten query, plan lines, executed calls, and the assistant reply.
"""

from officeagents import Orchestrator, OfficeSimulator
from officeagents.planner import plan_text_format

sim = OfficeSimulator("f1", seed=7)
orch = Orchestrator(sim)
session = orch.create_session()

script = [
    "Create a meeting at 3 PM today, the topic is project discussion, invite Jiashu Xia",
    "Move the start time up to 2 PM",
    "Check Jiashu Xia's free time tomorrow?",
]

for text in script:
    trace = orch.handle_message(session.id, text)
    turn = trace.turn
    print(f"\nuser> {text}")
    print(f"  related:   {turn.related}")
    print(f"  rewritten: {turn.rewritten_query}")
    if turn.plan:
        for line in plan_text_format(turn.plan).splitlines():
            print(f"  plan:      {line}")
    for call, result in turn.calls:
        print(f"  call:      {call.api_name}({call.args}) -> {result.status}")
    print(f"  reply:     {turn.reply}")

created = next(s for s in sim.stores["schedules"].values() if s.title == "project discussion")
print(f"\nsimulator state: '{created.title}' now starts at {created.start_time}")
print(f"memory slots: {orch.get_session(session.id).memory.entity_slots}")
