import { ServiceClient, ConnectivityError, ServiceError } from "./api.js";
import {
  initialState,
  sessionCreated,
  messageSent,
  messageFailed,
  messageReceived,
  type AppState,
} from "./store.js";
import { render, type Handlers } from "./view.js";

const client = new ServiceClient("");
const root = document.getElementById("app") as HTMLElement;

let state: AppState = initialState();

function update(next: AppState) {
  state = next;
  render(root, state, handlers);
}

function describe(err: unknown): string {
  if (err instanceof ConnectivityError) return err.message;
  if (err instanceof ServiceError) return `service error ${err.status}: ${err.detail}`;
  return String(err);
}

async function send(text: string) {
  if (state.sessionId === null || state.pending) return;
  const sessionId = state.sessionId;
  update(messageSent(state, text));
  try {
    const payload = await client.postMessage(sessionId, text);
    update(messageReceived(state, text, payload));
  } catch (err) {
    update(messageFailed(state, text, describe(err)));
  }
}

const handlers: Handlers = {
  onSend: send,
  onRetry: send,
};

async function boot() {
  render(root, state, handlers);
  try {
    const created = await client.createSession();
    update(sessionCreated(state, created.session_id));
  } catch (err) {
    update({ ...state, error: describe(err) });
  }
}

boot();
