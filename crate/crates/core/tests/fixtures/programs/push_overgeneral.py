import json
import sys

ROLE = {
    "you": "you", "strange": "you",
    "push": "push", "grow": "push",
    "stop": "stop", "eat": "stop",
}
DELTA = {"up": (0, -1), "right": (1, 0), "down": (0, 1), "left": (-1, 0)}


def is_text(o):
    return o["type"] != "world_object"


def rules(state):
    cells = {}
    for o in state["objects"]:
        if is_text(o):
            cells.setdefault(tuple(o["position"]), []).append(o)
    found = set()
    for (x, y), here in cells.items():
        for o in here:
            if o["type"] != "rule_noun":
                continue
            for dx, dy in ((1, 0), (0, 1)):
                mid = cells.get((x + dx, y + dy), [])
                end = cells.get((x + 2 * dx, y + 2 * dy), [])
                if any(m["word"] == "is" for m in mid):
                    for e in end:
                        if e["type"] == "rule_property" and e["word"] in ROLE:
                            found.add((o["word"], ROLE[e["word"]]))
    return found


def has(o, role, active):
    return not is_text(o) and (o["word"], role) in active


def send(obj):
    payload = json.dumps(obj, separators=(",", ":"))
    sys.stdout.write("%d %s\n" % (len(payload.encode("utf-8")), payload))
    sys.stdout.flush()


def serve(predict):
    send({"ready": True})
    for line in sys.stdin:
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            _, payload = line.split(" ", 1)
            request = json.loads(payload)
            send({"state": predict(request["state"], request["action"])})
        except Exception as exc:
            send({"error": "%s: %s" % (type(exc).__name__, exc)})


def pushable(o, active):
    return True


def predict(state, action):
    if action not in DELTA:
        return state
    active = rules(state)
    dx, dy = DELTA[action]
    w, h = state["grid_size"]
    objs = state["objects"]
    movers = [o for o in objs if has(o, "you", active)]
    movers.sort(key=lambda o: -(o["position"][0] * dx + o["position"][1] * dy))
    for m in movers:
        m["direction"] = "facing " + action
        chain = []
        x, y = m["position"]
        blocked = False
        while True:
            x, y = x + dx, y + dy
            if not (0 <= x < w and 0 <= y < h):
                blocked = True
                break
            here = [o for o in objs if tuple(o["position"]) == (x, y) and o is not m]
            if any(has(o, "stop", active) and not pushable(o, active) for o in here):
                blocked = True
                break
            ahead = [o for o in here if pushable(o, active)]
            if not ahead:
                break
            chain.extend(ahead)
        if blocked:
            continue
        for o in [m] + chain:
            o["position"] = [o["position"][0] + dx, o["position"][1] + dy]
            if not is_text(o):
                o["direction"] = "facing " + action
    return state


if __name__ == "__main__":
    serve(predict)
