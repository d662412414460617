// Browser entry point: wire keyboard, socket, and the render loop together.
// The server address comes from the `?server=` query parameter.

import { DriveClient, fetchMap } from "./client.js";
import { Canvas2D, geometryFor, render } from "./render.js";
import { ViewStore } from "./store.js";

function serverFromQuery(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server") ?? window.location.host ?? "127.0.0.1:8700";
}

async function start(): Promise<void> {
  const server = serverFromQuery();
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const store = new ViewStore();
  const client = new DriveClient(
    { server, socketFactory: (url) => new WebSocket(url) }, store);

  try {
    store.setMap(await fetchMap(server));
  } catch (err) {
    console.error("map unavailable:", err);
  }
  const geom = geometryFor(store.map);
  canvas.width = geom.width;
  canvas.height = geom.height;
  const ctx = canvas.getContext("2d") as unknown as Canvas2D;

  window.addEventListener("keydown", (event) => {
    client.input.setKeyByCode(event.code, true);
    if (event.code.startsWith("Arrow")) {
      event.preventDefault();
    }
  });
  window.addEventListener("keyup", (event) => {
    client.input.setKeyByCode(event.code, false);
  });

  const frame = () => {
    render(ctx, geom, store.latest(), store.map);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);

  try {
    await client.connect();
  } catch (err) {
    console.error("connection failed:", err);
  }
}

start();
