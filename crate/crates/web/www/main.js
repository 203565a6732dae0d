import init, { TextureDemo, run_segmentation, neighborhood_positions } from "./pkg/latmrf_web.js";

const $ = (id) => document.getElementById(id);

function paint(canvas, width, height, rgba) {
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(rgba), width, height), 0, 0);
}

function setupTexture() {
  const size = 150;
  let demo = new TextureDemo(size, 1n);
  let running = false;
  const draw = () => {
    paint($("tex-canvas"), size, size, demo.rgba());
    $("tex-cycles").value = demo.cycles_run();
  };
  const apply = () => {
    for (const k of ["v", "h", "d"]) $(`${k}-out`).value = Number($(k).value).toFixed(2);
    demo.set_params(Number($("h").value), Number($("v").value), Number($("d").value));
  };
  for (const k of ["v", "h", "d"]) $(k).addEventListener("input", apply);
  const loop = () => {
    if (!running) return;
    demo.step(1);
    draw();
    requestAnimationFrame(loop);
  };
  $("tex-run").addEventListener("click", () => {
    running = !running;
    $("tex-run").textContent = running ? "Pause" : "Run";
    loop();
  });
  $("tex-step").addEventListener("click", () => { demo.step(10); draw(); });
  $("tex-reset").addEventListener("click", () => { demo.randomize(); draw(); });
  $("tex-estimate").addEventListener("click", () => {
    const [v, h, d] = demo.estimate();
    $("tex-est").value = `estimates: vertical ${v.toFixed(3)}, horizontal ${h.toFixed(3)}, diagonal ${d.toFixed(3)}`;
  });
  apply();
  draw();
}

function setupSegmentation() {
  const run = () => {
    const noise = Number($("noise").value);
    const smooth = Number($("smooth").value);
    $("noise-out").value = noise.toFixed(2);
    $("smooth-out").value = smooth.toFixed(2);
    try {
      const view = run_segmentation(96, BigInt($("seg-seed").value || 0), noise, smooth);
      const canvas = $("seg-canvas");
      paint(canvas, view.width(), view.height(), view.rgba());
      canvas.style.width = `${3 * view.width()}px`;
      const fmt = (v) => Array.from(v, (x) => x.toFixed(2)).join(", ");
      $("seg-report").textContent =
        `accuracy ${view.accuracy().toFixed(4)} after ${view.iterations()} iterations\n` +
        `mu    ${fmt(view.mu())}\nsigma ${fmt(view.sigma())}`;
    } catch (e) {
      $("seg-report").textContent = String(e);
    }
  };
  $("noise").addEventListener("input", () => ($("noise-out").value = Number($("noise").value).toFixed(2)));
  $("smooth").addEventListener("input", () => ($("smooth-out").value = Number($("smooth").value).toFixed(2)));
  $("seg-run").addEventListener("click", run);
  run();
}

function setupNeighborhoods() {
  const canvas = $("nb-canvas");
  const ctx = canvas.getContext("2d");
  const draw = () => {
    const radius = Number($("radius").value);
    $("radius-out").value = radius;
    const flat = neighborhood_positions($("norm").value, radius);
    const span = 8;
    const cell = canvas.width / (2 * span + 1);
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const box = (r, c, color) => {
      ctx.fillStyle = color;
      ctx.fillRect((c + span) * cell + 1, (r + span) * cell + 1, cell - 2, cell - 2);
    };
    for (let r = -span; r <= span; r++) for (let c = -span; c <= span; c++) box(r, c, "#eee");
    for (let i = 0; i < flat.length; i += 2) {
      box(-flat[i], -flat[i + 1], "#9ecae1");
      box(flat[i], flat[i + 1], "#08519c");
    }
    box(0, 0, "#d62728");
    $("nb-count").value = `${flat.length / 2} positions`;
  };
  $("norm").addEventListener("change", draw);
  $("radius").addEventListener("input", draw);
  draw();
}

await init();
setupTexture();
setupSegmentation();
setupNeighborhoods();
