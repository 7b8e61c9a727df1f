use std::io::{self, BufRead, Write};

use baba_sim::{Action, LabelMap, Simulator};

use super::protocol::{self, Request};

/// Serves the built-in simulator over the prediction protocol until EOF.
/// Malformed requests get an error reply; the loop keeps going.
pub fn serve(labels: LabelMap, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
    let sim = Simulator::new(labels);
    protocol::write_frame(&mut output, protocol::READY)?;
    for line in input.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let reply = match answer(&sim, &line) {
            Ok(state) => format!(r#"{{"state":{state}}}"#),
            Err(e) => serde_json::json!({ "error": e }).to_string(),
        };
        protocol::write_frame(&mut output, &reply)?;
    }
    Ok(())
}

fn answer(sim: &Simulator, line: &str) -> Result<String, String> {
    let payload = protocol::parse_frame(line).map_err(|e| e.to_string())?;
    let req: Request = serde_json::from_str(payload).map_err(|e| format!("bad request: {e}"))?;
    let action = Action::parse(&req.action).ok_or_else(|| format!("unknown action {:?}", req.action))?;
    let state = baba_sim::decode_state(&req.state).map_err(|e| e.to_string())?;
    Ok(baba_sim::encode_json(&sim.step(&state, action)))
}
