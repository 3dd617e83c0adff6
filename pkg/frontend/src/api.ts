/** Thin fetch wrappers for the three service endpoints. */
import type { ConfigResponse, ErrorBody, LinkRequestBody, LinkResponse } from "./types.js";

export type LinkOutcome =
  | { ok: true; result: LinkResponse }
  | { ok: false; error: ErrorBody };

async function errorBody(response: Response): Promise<ErrorBody> {
  try {
    const body = await response.json();
    if (body && typeof body.code === "string" && typeof body.message === "string") {
      return body as ErrorBody;
    }
  } catch {
    // fall through to the generic body below
  }
  return { code: `http_${response.status}`, message: response.statusText || "request failed" };
}

export async function fetchHealth(): Promise<string> {
  const response = await fetch("/api/health");
  const body = await response.json();
  return typeof body.status === "string" ? body.status : "unknown";
}

export async function fetchConfig(): Promise<ConfigResponse> {
  const response = await fetch("/api/config");
  if (!response.ok) {
    const err = await errorBody(response);
    throw new Error(`config unavailable: error[${err.code}]: ${err.message}`);
  }
  return (await response.json()) as ConfigResponse;
}

export async function postLink(body: LinkRequestBody): Promise<LinkOutcome> {
  let response: Response;
  try {
    response = await fetch("/api/link", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (exc) {
    return {
      ok: false,
      error: { code: "network", message: exc instanceof Error ? exc.message : String(exc) },
    };
  }
  if (!response.ok) {
    return { ok: false, error: await errorBody(response) };
  }
  return { ok: true, result: (await response.json()) as LinkResponse };
}
