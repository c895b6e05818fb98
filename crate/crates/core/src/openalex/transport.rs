use std::time::Duration;

use super::FetchError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// A blocking HTTP GET. Implementations must be shareable across threads.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError>;
}

/// `ureq`-backed transport; non-2xx statuses are returned, not raised.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(concat!("atlas/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        UreqTransport::new(Duration::from_secs(60))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError> {
        let transport_err = |e: ureq::Error| FetchError::Transport { url: url.to_string(), message: e.to_string() };
        let mut resp = self.agent.get(url).call().map_err(transport_err)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_vec().map_err(transport_err)?;
        Ok(HttpResponse { status, body })
    }
}
