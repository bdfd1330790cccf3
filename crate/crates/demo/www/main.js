import init, { degree_days, synthetic_scatter, train_synthetic } from "./pkg/hotelwatt_demo.js";

const num = (form, name) => Number(form.querySelector(`[name=${name}]`).value);

function show(section, fn) {
  const stats = section.querySelector(".stats");
  try {
    fn();
  } catch (err) {
    if (stats) {
      stats.textContent = String(err);
      stats.className = "stats error";
    } else {
      section.querySelector(".chart").innerHTML = `<p class="error">${err}</p>`;
    }
  }
}

function drawDegreeDays() {
  const s = document.getElementById("dd");
  show(s, () => {
    const clip = s.querySelector("[name=clip]").checked;
    s.querySelector(".chart").innerHTML = degree_days(
      num(s, "reference"), clip, num(s, "occupancy"), num(s, "lo"), num(s, "hi"), 81);
  });
}

function drawScatter() {
  const s = document.getElementById("scatter");
  show(s, () => {
    const out = synthetic_scatter(num(s, "days"), num(s, "noise"), num(s, "seed"), num(s, "reference"));
    s.querySelector(".chart").innerHTML = out.svg;
    const stats = s.querySelector(".stats");
    stats.className = "stats";
    stats.textContent = `Pearson r(RDD, energy) = ${out.r.toFixed(3)}`;
    out.free();
  });
}

function runTraining() {
  const s = document.getElementById("train");
  const stats = s.querySelector(".stats");
  stats.className = "stats";
  stats.textContent = "training...";
  // Let the status text paint before the synchronous training call.
  setTimeout(() => show(s, () => {
    const t0 = performance.now();
    const out = train_synthetic(num(s, "days"), num(s, "noise"), num(s, "seed"),
      num(s, "h1"), num(s, "h2"), num(s, "h3"), num(s, "epochs"), num(s, "lr"));
    const ms = performance.now() - t0;
    s.querySelector(".loss").innerHTML = out.loss_svg;
    s.querySelector(".forecast").innerHTML = out.forecast_svg;
    stats.textContent = `fit RMSE ${out.fit_rmse.toFixed(2)} kWh, holdout MAPE ${out.forecast_mape.toFixed(2)}%, `
      + `${out.epochs_run} epochs in ${ms.toFixed(0)} ms`;
    out.free();
  }), 10);
}

await init();
const dd = document.getElementById("dd");
dd.addEventListener("input", drawDegreeDays);
drawDegreeDays();
document.querySelector("#scatter button").addEventListener("click", drawScatter);
drawScatter();
document.querySelector("#train button").addEventListener("click", runTraining);
