package sfw.support;

public class Decoy1 {
    void wire1() {
        // context provider registry listener adapter context
        // provider registry listener adapter context provider
        // registry listener adapter context provider registry
        // listener adapter
    }
}
