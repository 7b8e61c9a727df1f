import json
import sys


def predict(state, action):
    """Return the next state document for `state` after `action`."""
    return state


def send(obj):
    payload = json.dumps(obj, separators=(",", ":"))
    sys.stdout.write("%d %s\n" % (len(payload.encode("utf-8")), payload))
    sys.stdout.flush()


def main():
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


if __name__ == "__main__":
    main()
