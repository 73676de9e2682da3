package sfw.misc;

public class Filler01 {
    void work1() {
        // network socket channel buffer packet framing
        // network socket channel buffer packet framing
        // network socket channel buffer packet framing
    }
}
