//! Outbox delivery: POSTs due notifications and reschedules failures with
//! exponential backoff. Entries leave the outbox only after a 2xx, so
//! delivery is at-least-once.

use chrono::Utc;
use tracing::{debug, warn};

use crate::state::SharedState;

pub const DELIVERY_HEADER: &str = "X-Topiary-Delivery";

/// One pass over every project. Returns the number of successful deliveries.
pub async fn deliver_due(state: &SharedState, client: &reqwest::Client) -> usize {
    let mut delivered = 0;
    for handle in state.projects() {
        let (pid, due) = {
            let project = handle.project.read();
            (project.id().clone(), project.due_deliveries(Utc::now()))
        };
        for entry in due {
            let result = client
                .post(&entry.url)
                .header(DELIVERY_HEADER, format!("{pid}-{}", entry.id))
                .json(&entry.payload)
                .send()
                .await
                .and_then(|r| r.error_for_status());
            let mut project = handle.project.write();
            let outcome = match result {
                Ok(_) => {
                    delivered += 1;
                    debug!(id = entry.id, url = %entry.url, "webhook delivered");
                    project.delivery_succeeded(entry.id)
                }
                Err(e) => {
                    warn!(id = entry.id, url = %entry.url, attempts = entry.attempts + 1, "webhook failed: {e}");
                    project.delivery_failed(entry.id, e.to_string(), Utc::now(), &state.config.retry)
                }
            };
            if let Err(e) = outcome {
                warn!("outbox update failed: {e}");
            }
        }
    }
    delivered
}

pub fn spawn_worker(state: SharedState) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let client = reqwest::Client::builder().timeout(state.config.webhook_timeout).build().expect("http client");
        let mut tick = tokio::time::interval(state.config.webhook_poll);
        loop {
            tick.tick().await;
            deliver_due(&state, &client).await;
        }
    })
}
